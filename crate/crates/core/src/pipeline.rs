//! Stage functions behind the command-line verbs. Each stage reads and writes
//! a run directory:
//!
//! ```text
//! config.json              resolved configuration
//! trace.{bin,csv}          signal burst
//! truth.csv                per-scan ground truth of the signal burst
//! vacuum.{bin,csv}         burst with probe and signal blocked
//! reference.{bin,csv}      burst without the atomic medium (input states)
//! reference_truth.csv
//! calibration.json         volts-to-quadrature scale and extraction tallies
//! records.csv              quadrature records of the signal burst
//! reference_records.csv
//! phases.csv               per-shot phase shifts and amplitudes
//! bins.csv                 bin manifest
//! recon/                   one report, density matrix and Wigner grid per bin and case
//! figures/                 plot-ready tables
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic::{AtomicParams, FieldSet};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::extract::{self, bin_records, Case, PhaseBin, QuadratureRecord};
use crate::io::{self, BinRow, TraceFormat};
use crate::phase;
use crate::synth::{self, HomodyneTrace};
use crate::tomography::{reconstruct_report, DensityMatrix, QuadratureDataset, ReconstructionReport, ReportOptions};

/// File layout of a run directory.
#[derive(Clone, Debug)]
pub struct RunPaths {
    pub root: PathBuf,
}

impl RunPaths {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        RunPaths { root: root.into() }
    }

    fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn config(&self) -> PathBuf {
        self.file("config.json")
    }

    pub fn trace(&self, format: TraceFormat) -> PathBuf {
        self.file(&format!("trace.{}", format.extension()))
    }

    pub fn vacuum(&self, format: TraceFormat) -> PathBuf {
        self.file(&format!("vacuum.{}", format.extension()))
    }

    pub fn reference(&self, format: TraceFormat) -> PathBuf {
        self.file(&format!("reference.{}", format.extension()))
    }

    pub fn truth(&self) -> PathBuf {
        self.file("truth.csv")
    }

    pub fn reference_truth(&self) -> PathBuf {
        self.file("reference_truth.csv")
    }

    pub fn calibration(&self) -> PathBuf {
        self.file("calibration.json")
    }

    pub fn records(&self) -> PathBuf {
        self.file("records.csv")
    }

    pub fn reference_records(&self) -> PathBuf {
        self.file("reference_records.csv")
    }

    pub fn phases(&self) -> PathBuf {
        self.file("phases.csv")
    }

    pub fn bins(&self) -> PathBuf {
        self.file("bins.csv")
    }

    pub fn recon_dir(&self) -> PathBuf {
        self.file("recon")
    }

    pub fn figures_dir(&self) -> PathBuf {
        self.file("figures")
    }

    /// Report path of one bin and case, or of the input reference.
    pub fn report(&self, bin: Option<usize>, case: Case) -> PathBuf {
        self.recon_dir().join(format!("{}.json", recon_stem(bin, case)))
    }

    pub fn density(&self, bin: Option<usize>, case: Case) -> PathBuf {
        self.recon_dir().join(format!("{}_rho.json", recon_stem(bin, case)))
    }

    pub fn wigner(&self, bin: Option<usize>, case: Case) -> PathBuf {
        self.recon_dir().join(format!("{}_wigner.csv", recon_stem(bin, case)))
    }

    /// First existing trace among the known formats.
    fn existing(&self, make: impl Fn(TraceFormat) -> PathBuf) -> Option<PathBuf> {
        [TraceFormat::Binary, TraceFormat::Csv].into_iter().map(make).find(|p| p.is_file())
    }
}

fn recon_stem(bin: Option<usize>, case: Case) -> String {
    match bin {
        Some(k) => format!("bin{k}_{}", case.tag()),
        None => "input".to_string(),
    }
}

/// Independent seeds for the bursts and bootstrap streams of one run.
fn derive_seed(seed: u64, salt: u64) -> u64 {
    // SplitMix64 finalizer.
    let mut z = seed.wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub samples: usize,
    pub scans: usize,
    pub sample_rate: f64,
}

/// Synthesizes the signal, vacuum and reference bursts and their sidecars.
pub fn simulate(cfg: &RunConfig, paths: &RunPaths) -> Result<SimulateSummary> {
    cfg.validate()?;
    let seed = cfg.seed.ok_or_else(|| Error::Config("a seed is required to simulate".into()))?;
    let params = cfg.atomic_params()?;
    let trace = synth::synth_burst(&params, &cfg.fields, &cfg.schedule, &cfg.scan, &cfg.noise, seed)?;
    info!("stage=simulate burst=signal samples={} scans={}", trace.samples.len(), trace.truth.as_ref().map_or(0, Vec::len));

    let blocked = FieldSet { probe: 0.0, signal: 0.0, ..cfg.fields };
    let vac_scan = synth::ScanConfig { burst_len: cfg.vacuum_burst_len, ..cfg.scan };
    let vacuum = synth::synth_burst(&params, &blocked, &cfg.schedule, &vac_scan, &cfg.noise, derive_seed(seed, 1))?;

    let no_cell = AtomicParams { alpha_p: 0.0, alpha_s: 0.0, ..params };
    let reference = synth::synth_burst(&no_cell, &cfg.fields, &cfg.schedule, &cfg.scan, &cfg.noise, derive_seed(seed, 2))?;

    let fmt = cfg.trace_format;
    io::write_trace(&paths.trace(fmt), &trace, fmt)?;
    io::write_truth(&paths.truth(), trace.truth.as_deref().unwrap_or(&[]))?;
    io::write_trace(&paths.vacuum(fmt), &vacuum, fmt)?;
    io::write_trace(&paths.reference(fmt), &reference, fmt)?;
    io::write_truth(&paths.reference_truth(), reference.truth.as_deref().unwrap_or(&[]))?;
    let resolved = RunConfig { atomic: Some(params), output: Some(paths.root.clone()), ..cfg.clone() };
    io::write_json(&paths.config(), &resolved)?;
    Ok(SimulateSummary {
        samples: trace.samples.len(),
        scans: trace.truth.as_ref().map_or(0, Vec::len),
        sample_rate: trace.scan.sample_rate,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractSummary {
    /// Volts-to-quadrature scale.
    pub scale: f64,
    /// Whether `scale` came from a vacuum burst rather than the nominal gain.
    pub vacuum_calibrated: bool,
    pub shots: usize,
    pub records: usize,
    pub excluded_shots: usize,
    pub degenerate_dl: usize,
    pub reference_records: usize,
    pub reference_excluded_shots: usize,
}

/// Per-shot phase table row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub scan_id: usize,
    pub bin_index: usize,
    pub lo: f64,
    pub hi: f64,
    pub dphi_fwm: f64,
    pub dphi_dl: f64,
    pub amp_probe: f64,
    pub amp_dl: f64,
    pub amp_fwm: f64,
    pub dl_degenerate: bool,
}

fn phase_rows(records: &[QuadratureRecord], n_bins: usize) -> Vec<PhaseRow> {
    let mut by_scan: BTreeMap<usize, [Option<&QuadratureRecord>; 3]> = BTreeMap::new();
    for r in records {
        by_scan.entry(r.scan_id).or_default()[r.case.index()] = Some(r);
    }
    by_scan
        .into_iter()
        .filter_map(|(scan_id, recs)| {
            let [Some(p), Some(d), Some(f)] = recs else { return None };
            let k = extract::bin_index(p.dphi_fwm, n_bins);
            let (lo, hi) = extract::bin_edges(k, n_bins);
            Some(PhaseRow {
                scan_id,
                bin_index: k,
                lo,
                hi,
                dphi_fwm: p.dphi_fwm,
                dphi_dl: p.dphi_dl,
                amp_probe: p.fit.amplitude,
                amp_dl: d.fit.amplitude,
                amp_fwm: f.fit.amplitude,
                dl_degenerate: d.fit.degenerate,
            })
        })
        .collect()
}

fn read_trace_at(path: Option<PathBuf>, what: &str) -> Result<HomodyneTrace> {
    let path = path.ok_or_else(|| Error::Config(format!("no {what} trace found")))?;
    io::read_trace(&path)
}

/// Calibrates, extracts and bins the signal and reference bursts.
///
/// `trace` overrides the signal trace location. Without a vacuum burst the
/// nominal detector gain from the trace header is used.
pub fn extract(cfg: &RunConfig, paths: &RunPaths, trace: Option<&Path>) -> Result<ExtractSummary> {
    let signal = read_trace_at(trace.map(Path::to_path_buf).or_else(|| paths.existing(|f| paths.trace(f))), "signal")?;
    let (scale, vacuum_calibrated) = match paths.existing(|f| paths.vacuum(f)) {
        Some(p) => (extract::calibrate_vacuum(&io::read_trace(&p)?)?, true),
        None => {
            warn!("event=no_vacuum_trace fallback=nominal_gain lo_amplitude={}", signal.scan.lo_amplitude);
            (1.0 / signal.scan.lo_amplitude, false)
        }
    };
    let shots = extract::split_shots(&signal)?.len();
    let ex = extract::extract_trace(&signal, scale, &cfg.extract)?;
    info!(
        "stage=extract shots={} records={} excluded_shots={} degenerate_dl={} scale={scale}",
        shots,
        ex.records.len(),
        ex.excluded_shots,
        ex.degenerate_dl
    );
    if ex.records.is_empty() {
        warn!("event=all_shots_degenerate shots={shots}");
    }
    let (ref_records, ref_excluded) = match paths.existing(|f| paths.reference(f)) {
        Some(p) => {
            let r = extract::extract_probe_only(&io::read_trace(&p)?, scale, &cfg.extract)?;
            (r.records, r.excluded_shots)
        }
        None => (Vec::new(), 0),
    };
    let bins = bin_records(&ex.records, cfg.n_bins)?;
    io::write_records(&paths.records(), &ex.records)?;
    io::write_records(&paths.reference_records(), &ref_records)?;
    io::write_bins(&paths.bins(), &bins)?;
    io::write_table(&paths.phases(), &phase_rows(&ex.records, cfg.n_bins))?;
    let summary = ExtractSummary {
        scale,
        vacuum_calibrated,
        shots,
        records: ex.records.len(),
        excluded_shots: ex.excluded_shots,
        degenerate_dl: ex.degenerate_dl,
        reference_records: ref_records.len(),
        reference_excluded_shots: ref_excluded,
    };
    io::write_json(&paths.calibration(), &summary)?;
    Ok(summary)
}

/// Re-bins existing records into `n_bins` bins and rewrites the manifest.
pub fn rebin(paths: &RunPaths, n_bins: usize) -> Result<Vec<BinRow>> {
    let records = io::read_records(&paths.records())?;
    let bins = bin_records(&records, n_bins)?;
    io::write_bins(&paths.bins(), &bins)?;
    io::write_table(&paths.phases(), &phase_rows(&records, n_bins))?;
    Ok(bins.iter().map(BinRow::from).collect())
}

/// Which bins and cases to reconstruct.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Selection {
    /// `None` selects every bin.
    pub bins: Option<Vec<usize>>,
    /// `None` selects every case.
    pub cases: Option<Vec<Case>>,
}

impl Selection {
    fn includes(&self, bin: usize, case: Case) -> bool {
        self.bins.as_ref().is_none_or(|b| b.contains(&bin)) && self.cases.as_ref().is_none_or(|c| c.contains(&case))
    }
}

/// Mean output phase of `case` over the records of a bin, relative to the probe-only output.
pub fn bin_case_phase(bin: &PhaseBin, case: Case) -> f64 {
    let recs = &bin.records[case.index()];
    let phase_of = |r: &QuadratureRecord| match case {
        Case::ProbeOnly => 0.0,
        Case::DoubleLambda => r.dphi_dl,
        Case::FwmOnly => r.dphi_fwm,
    };
    phase::circular_mean(recs.iter().map(phase_of)).unwrap_or(0.0)
}

fn report_options(cfg: &RunConfig, salt: u64) -> ReportOptions {
    ReportOptions {
        mle: cfg.mle(),
        resamples: cfg.bootstrap,
        seed: derive_seed(cfg.seed.unwrap_or(0), salt),
        ..ReportOptions::default()
    }
}

fn write_report(paths: &RunPaths, bin: Option<usize>, case: Case, report: &ReconstructionReport) -> Result<()> {
    io::write_json(&paths.report(bin, case), report)?;
    if let Some(rho) = &report.rho {
        io::write_density(&paths.density(bin, case), rho)?;
    }
    if let Some(grid) = &report.wigner {
        io::write_wigner(&paths.wigner(bin, case), grid)?;
    }
    Ok(())
}

/// Reconstruction of the input state from the reference burst.
pub fn reconstruct_input(cfg: &RunConfig, paths: &RunPaths) -> Result<Option<ReconstructionReport>> {
    let path = paths.reference_records();
    if !path.is_file() {
        warn!("event=no_reference_records fidelity_vs_input=skipped");
        return Ok(None);
    }
    let recs = io::read_records(&path)?;
    let pairs: Vec<(f64, f64)> =
        recs.iter().filter(|r| r.case == Case::ProbeOnly).flat_map(|r| r.points.iter().copied()).collect();
    if pairs.is_empty() {
        warn!("event=empty_reference fidelity_vs_input=skipped");
        return Ok(None);
    }
    let report = reconstruct_report(&QuadratureDataset::new(pairs), None, &report_options(cfg, 1 << 20))?;
    write_report(paths, None, Case::ProbeOnly, &report)?;
    info!("stage=reconstruct target=input points={} mean_photon={:.4}", report.points, report.mean_photon.value);
    Ok(Some(report))
}

/// Reconstructs every selected bin and case; empty bins are skipped.
///
/// Runs on the current rayon pool; results do not depend on its size.
pub fn reconstruct(cfg: &RunConfig, paths: &RunPaths, selection: &Selection) -> Result<Vec<ReconstructionReport>> {
    cfg.validate()?;
    let records = io::read_records(&paths.records())?;
    let bins = bin_records(&records, cfg.n_bins)?;
    let input = reconstruct_input(cfg, paths)?;
    let input_rho: Option<DensityMatrix> = match input.and_then(|r| r.rho) {
        Some(rho) if rho.cutoff() == cfg.cutoff => Some(rho),
        Some(rho) => Some(rho.resized(cfg.cutoff)?),
        None => None,
    };
    let mut tasks = Vec::new();
    for bin in &bins {
        for case in Case::ALL {
            if !selection.includes(bin.index, case) {
                continue;
            }
            if bin.count(case) == 0 {
                warn!("event=empty_bin bin={} case={case} skipped=true", bin.index);
                continue;
            }
            tasks.push((bin, case));
        }
    }
    let reports: Vec<ReconstructionReport> = tasks
        .par_iter()
        .map(|&(bin, case)| {
            let data = QuadratureDataset { pairs: bin.pairs(case), source: Some((bin.index, case)) };
            let reference = input_rho.as_ref().map(|rho| rho.rotated(bin_case_phase(bin, case)));
            let salt = (bin.index as u64) * 3 + case.index() as u64;
            let report = reconstruct_report(&data, reference.as_ref(), &report_options(cfg, salt))?;
            write_report(paths, Some(bin.index), case, &report)?;
            info!(
                "stage=reconstruct bin={} case={case} points={} iterations={} converged={} mean_photon={:.4} overlap={:.4}",
                bin.index, report.points, report.iterations, report.converged, report.mean_photon.value, report.coherent_overlap.value
            );
            Ok(report)
        })
        .collect::<Result<_>>()?;
    Ok(reports)
}

/// Loads every per-bin report found in the run directory, ordered by bin and case.
pub fn load_reports(paths: &RunPaths, n_bins: usize) -> Result<Vec<ReconstructionReport>> {
    let mut out = Vec::new();
    for k in 0..n_bins {
        for case in Case::ALL {
            let p = paths.report(Some(k), case);
            if p.is_file() {
                out.push(io::read_json(&p)?);
            }
        }
    }
    Ok(out)
}

/// Algebraic (Kåsa) circle fit; returns `(cx, cy, r)`.
pub fn fit_circle(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    use nalgebra::{Matrix3, Vector3};
    if points.len() < 3 {
        return Err(Error::InsufficientData { needed: 3, got: points.len() });
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut atb = Vector3::<f64>::zeros();
    for &(x, y) in points {
        let row = Vector3::new(x, y, 1.0);
        ata += row * row.transpose();
        atb += row * (x * x + y * y);
    }
    let s = ata.try_inverse().ok_or(Error::Singular("collinear points in circle fit"))? * atb;
    let (cx, cy) = (0.5 * s[0], 0.5 * s[1]);
    Ok((cx, cy, (s[2] + cx * cx + cy * cy).max(0.0).sqrt()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub bin_index: usize,
    pub lo: f64,
    pub hi: f64,
    pub case: Case,
    pub count: usize,
    pub points: usize,
    pub value: f64,
    pub err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerMaxRow {
    pub bin_index: usize,
    pub lo: f64,
    pub hi: f64,
    pub case: Case,
    pub count: usize,
    pub x: f64,
    pub p: f64,
    pub radius: f64,
    pub angle: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerIndexRow {
    pub bin_index: usize,
    pub lo: f64,
    pub hi: f64,
    pub case: Case,
    pub count: usize,
    pub file: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureRow {
    pub bin_index: usize,
    pub lo: f64,
    pub hi: f64,
    pub case: Case,
    pub count: usize,
    pub theta: f64,
    pub x: f64,
}

/// Circle geometry of the Wigner-maximum loci.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocusSummary {
    pub case: Case,
    pub bins: usize,
    pub mean_radius: f64,
    /// Largest `|r − mean| / mean` of the distances from the origin.
    pub max_radius_deviation: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub fit_radius: f64,
    /// Distance of the fitted center from the origin.
    pub center_offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub reports: usize,
    pub loci: Vec<LocusSummary>,
}

/// Locus geometry per case from the Wigner maxima of `reports`.
pub fn locus_summaries(reports: &[ReconstructionReport]) -> Vec<LocusSummary> {
    Case::ALL
        .iter()
        .filter_map(|&case| {
            let pts: Vec<(f64, f64)> = reports.iter().filter(|r| r.case == Some(case)).map(|r| r.wigner_max).collect();
            if pts.is_empty() {
                return None;
            }
            let radii: Vec<f64> = pts.iter().map(|p| p.0.hypot(p.1)).collect();
            let mean = radii.iter().sum::<f64>() / radii.len() as f64;
            let dev = radii.iter().map(|r| (r - mean).abs() / mean).fold(0.0, f64::max);
            let (cx, cy, fr) = fit_circle(&pts).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
            Some(LocusSummary {
                case,
                bins: pts.len(),
                mean_radius: mean,
                max_radius_deviation: dev,
                center_x: cx,
                center_y: cy,
                fit_radius: fr,
                center_offset: cx.hypot(cy),
            })
        })
        .collect()
}

/// Writes the plot-ready tables under `figures/`.
pub fn report(cfg: &RunConfig, paths: &RunPaths) -> Result<ReportSummary> {
    let reports = load_reports(paths, cfg.n_bins)?;
    if reports.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let records = io::read_records(&paths.records())?;
    let bins = bin_records(&records, cfg.n_bins)?;
    let dir = paths.figures_dir();

    io::write_table(&dir.join("phase_scatter.csv"), &phase_rows(&records, cfg.n_bins))?;

    let quads: Vec<QuadratureRow> = bins
        .iter()
        .flat_map(|b| {
            Case::ALL.into_iter().flat_map(move |case| {
                let count = b.count(case);
                b.pairs(case).into_iter().map(move |(theta, x)| QuadratureRow { bin_index: b.index, lo: b.lo, hi: b.hi, case, count, theta, x })
            })
        })
        .collect();
    io::write_table(&dir.join("bin_quadratures.csv"), &quads)?;

    let bin_of = |r: &ReconstructionReport| &bins[r.bin.unwrap_or(0).min(bins.len() - 1)];
    let case_of = |r: &ReconstructionReport| r.case.unwrap_or(Case::ProbeOnly);
    let metric = |f: &dyn Fn(&ReconstructionReport) -> Option<(f64, f64)>| -> Vec<MetricRow> {
        reports
            .iter()
            .filter_map(|r| {
                let (value, err) = f(r)?;
                let b = bin_of(r);
                Some(MetricRow { bin_index: b.index, lo: b.lo, hi: b.hi, case: case_of(r), count: b.count(case_of(r)), points: r.points, value, err })
            })
            .collect()
    };
    io::write_table(&dir.join("mean_photon.csv"), &metric(&|r| Some((r.mean_photon.value, r.mean_photon.err))))?;
    io::write_table(&dir.join("purity.csv"), &metric(&|r| Some((r.purity.value, r.purity.err))))?;
    io::write_table(&dir.join("coherent_overlap.csv"), &metric(&|r| Some((r.coherent_overlap.value, r.coherent_overlap.err))))?;
    io::write_table(&dir.join("fidelity.csv"), &metric(&|r| r.fidelity_vs_input.map(|e| (e.value, e.err))))?;

    let maxima: Vec<WignerMaxRow> = reports
        .iter()
        .map(|r| {
            let b = bin_of(r);
            let (x, p) = r.wigner_max;
            WignerMaxRow { bin_index: b.index, lo: b.lo, hi: b.hi, case: case_of(r), count: b.count(case_of(r)), x, p, radius: x.hypot(p), angle: p.atan2(x) }
        })
        .collect();
    io::write_table(&dir.join("wigner_max.csv"), &maxima)?;

    let index: Vec<WignerIndexRow> = reports
        .iter()
        .map(|r| {
            let b = bin_of(r);
            let file = paths.wigner(r.bin, case_of(r));
            let rel = file.strip_prefix(&paths.root).unwrap_or(&file).to_string_lossy().into_owned();
            WignerIndexRow { bin_index: b.index, lo: b.lo, hi: b.hi, case: case_of(r), count: b.count(case_of(r)), file: rel }
        })
        .collect();
    io::write_table(&dir.join("wigner_index.csv"), &index)?;

    let loci = locus_summaries(&reports);
    io::write_table(&dir.join("wigner_locus.csv"), &loci)?;
    info!("stage=report reports={} tables=9", reports.len());
    Ok(ReportSummary { reports: reports.len(), loci })
}

/// Every stage in sequence.
pub fn run_all(cfg: &RunConfig, paths: &RunPaths) -> Result<ReportSummary> {
    simulate(cfg, paths)?;
    extract(cfg, paths, None)?;
    reconstruct(cfg, paths, &Selection::default())?;
    report(cfg, paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_fit_recovers_circle() {
        let pts: Vec<(f64, f64)> = (0..7).map(|k| {
            let a = k as f64 * 0.9;
            (1.5 + 2.0 * a.cos(), -0.5 + 2.0 * a.sin())
        }).collect();
        let (cx, cy, r) = fit_circle(&pts).unwrap();
        assert!((cx - 1.5).abs() < 1e-10 && (cy + 0.5).abs() < 1e-10 && (r - 2.0).abs() < 1e-10);
        assert!(fit_circle(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn derived_seeds_differ() {
        let s: std::collections::HashSet<u64> = (0..100).map(|k| derive_seed(42, k)).collect();
        assert_eq!(s.len(), 100);
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
    }

    #[test]
    fn selection_filters() {
        let all = Selection::default();
        assert!(all.includes(3, Case::FwmOnly));
        let some = Selection { bins: Some(vec![1]), cases: Some(vec![Case::DoubleLambda]) };
        assert!(some.includes(1, Case::DoubleLambda));
        assert!(!some.includes(1, Case::FwmOnly));
        assert!(!some.includes(2, Case::DoubleLambda));
    }
}
