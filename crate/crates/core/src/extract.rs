//! Shot-by-shot phase extraction.
//!
//! A burst is cut into one shot per LO scan. Within a shot each pulse window
//! is reduced to a single peak value, the peak values of each case are fitted
//! to `a·cos ωt + b·sin ωt + c`, and the fitted phases give the double-Λ and
//! FWM phase shifts relative to the probe-only pulse. Calibrated peak values
//! become quadrature samples `(θ, x)` ready for tomography.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase;
use crate::synth::{HomodyneTrace, PulseSchedule, ScanConfig};

/// Fits whose amplitude is below this many standard errors are degenerate.
pub const DEFAULT_DEGENERATE_SIGMAS: f64 = 5.0;
pub const DEFAULT_BINS: usize = 10;

/// Pulse type within a triplet, in firing order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    ProbeOnly,
    DoubleLambda,
    FwmOnly,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::ProbeOnly, Case::DoubleLambda, Case::FwmOnly];

    pub fn index(self) -> usize {
        match self {
            Case::ProbeOnly => 0,
            Case::DoubleLambda => 1,
            Case::FwmOnly => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Case::ProbeOnly => "probe-only",
            Case::DoubleLambda => "double-lambda",
            Case::FwmOnly => "fwm-only",
        }
    }

    /// Short tag used in file names.
    pub fn tag(self) -> &'static str {
        match self {
            Case::ProbeOnly => "probe",
            Case::DoubleLambda => "dl",
            Case::FwmOnly => "fwm",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Case::ALL
            .into_iter()
            .find(|c| c.label() == s || c.tag() == s)
            .ok_or_else(|| Error::Config(format!("unknown case `{s}`")))
    }
}

/// One LO scan worth of samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Shot {
    pub scan_id: usize,
    pub samples: Vec<f64>,
    /// Start time within the burst, seconds.
    pub t0: f64,
}

/// Peak values `(time, volts)` of one shot, indexed by [`Case::index`].
pub type Peaks = [Vec<(f64, f64)>; 3];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinusoidFit {
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub residual_rms: f64,
    /// Standard error of the amplitude.
    pub amplitude_err: f64,
    pub degenerate: bool,
}

/// Which phase the record's θ axis is measured from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseReference {
    /// θ relative to the shot's fitted probe-only phase, so the probe-only
    /// state has phase 0 in every shot and drift of the optical path cancels.
    #[default]
    Probe,
    /// Raw LO phase of the sweep.
    Lo,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExtractOptions {
    pub degenerate_sigmas: f64,
    pub reference: PhaseReference,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        ExtractOptions { degenerate_sigmas: DEFAULT_DEGENERATE_SIGMAS, reference: PhaseReference::Probe }
    }
}

/// Quadrature samples of one case in one shot.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRecord {
    pub scan_id: usize,
    pub case: Case,
    /// `(θ, x)` with θ strictly increasing.
    pub points: Vec<(f64, f64)>,
    /// Fit of `x` against θ, in quadrature units.
    pub fit: SinusoidFit,
    pub dphi_fwm: f64,
    pub dphi_dl: f64,
}

impl QuadratureRecord {
    /// Rebuilds a record from its points, recomputing the fit.
    pub fn from_points(scan_id: usize, case: Case, points: Vec<(f64, f64)>, dphi_fwm: f64, dphi_dl: f64) -> Result<Self> {
        let fit = fit_sinusoid(&points, 1.0)?;
        Ok(QuadratureRecord { scan_id, case, points, fit, dphi_fwm, dphi_dl })
    }

    pub fn degenerate(&self) -> bool {
        self.fit.degenerate
    }
}

/// Output of [`to_quadrature_records`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Extraction {
    pub records: Vec<QuadratureRecord>,
    /// Shots dropped because the probe-only or FWM-only fit was degenerate.
    pub excluded_shots: usize,
    /// Shots kept although the double-Λ fit was degenerate.
    pub degenerate_dl: usize,
}

/// Records whose `dphi_fwm` falls in `(lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseBin {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    /// Indexed by [`Case::index`].
    pub records: [Vec<QuadratureRecord>; 3],
}

impl PhaseBin {
    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn count(&self, case: Case) -> usize {
        self.records[case.index()].len()
    }

    /// All `(θ, x)` pairs of one case.
    pub fn pairs(&self, case: Case) -> Vec<(f64, f64)> {
        self.records[case.index()].iter().flat_map(|r| r.points.iter().copied()).collect()
    }
}

/// Cuts a burst into consecutive scan-length shots, dropping a trailing partial one.
pub fn split_shots(trace: &HomodyneTrace) -> Result<Vec<Shot>> {
    let spp = trace.scan.samples_per_scan();
    let n = trace.samples.len() / spp.max(1);
    if spp == 0 || n == 0 {
        return Err(Error::InsufficientData { needed: spp.max(1), got: trace.samples.len() });
    }
    Ok(trace
        .samples
        .chunks_exact(spp)
        .enumerate()
        .map(|(scan_id, c)| Shot { scan_id, samples: c.to_vec(), t0: (scan_id * spp) as f64 / trace.scan.sample_rate })
        .collect())
}

/// Central half `[start + n/4, end − n/4)` of a pulse window.
fn central_half(start: usize, end: usize) -> (usize, usize) {
    let q = (end - start) / 4;
    (start + q, end - q)
}

/// Mean voltage over the central half of every pulse window, tagged with the
/// window-center time relative to the shot start.
pub fn extract_peaks(shot: &Shot, schedule: &PulseSchedule, scan: &ScanConfig) -> Result<Peaks> {
    let triplets = schedule.triplets_per_scan(scan.scan_period());
    let len = shot.samples.len();
    let mut out: Peaks = Default::default();
    for k in 0..triplets {
        for case in Case::ALL {
            let (start, end) = schedule.window(k, case, scan.sample_rate);
            if end > len {
                return Err(Error::Schedule { start, end, len });
            }
            let (a, b) = central_half(start, end);
            let mean = shot.samples[a..b].iter().sum::<f64>() / (b - a) as f64;
            out[case.index()].push((schedule.center(k, case), mean));
        }
    }
    Ok(out)
}

/// Linear least-squares fit of `a·cos ωt + b·sin ωt + c` with known `ω`.
///
/// ```
/// use dlphase::extract::fit_sinusoid;
/// let pts: Vec<(f64, f64)> = (0..20).map(|i| {
///     let t = i as f64 * 0.3;
///     (t, 1.5 * (t - 0.7).cos() + 0.2)
/// }).collect();
/// let fit = fit_sinusoid(&pts, 1.0).unwrap();
/// assert!((fit.amplitude - 1.5).abs() < 1e-9);
/// assert!((fit.phase - 0.7).abs() < 1e-9);
/// assert!(!fit.degenerate);
/// ```
pub fn fit_sinusoid(points: &[(f64, f64)], omega: f64) -> Result<SinusoidFit> {
    fit_sinusoid_with(points, omega, DEFAULT_DEGENERATE_SIGMAS)
}

/// [`fit_sinusoid`] with an explicit degeneracy threshold in standard errors.
pub fn fit_sinusoid_with(points: &[(f64, f64)], omega: f64, sigmas: f64) -> Result<SinusoidFit> {
    if points.len() < 4 {
        return Err(Error::InsufficientData { needed: 4, got: points.len() });
    }
    if !(omega > 0.0) {
        return Err(Error::InvalidParams("fit frequency must be positive".into()));
    }
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for &(t, y) in points {
        let (s, c) = (omega * t).sin_cos();
        let row = Vector3::new(c, s, 1.0);
        ata += row * row.transpose();
        aty += row * y;
    }
    let inv = ata.try_inverse().ok_or(Error::Singular("sinusoid design matrix"))?;
    let coef = inv * aty;
    let (a, b, c) = (coef[0], coef[1], coef[2]);
    let rss: f64 = points
        .iter()
        .map(|&(t, y)| {
            let (s, co) = (omega * t).sin_cos();
            let r = y - (a * co + b * s + c);
            r * r
        })
        .sum();
    let n = points.len() as f64;
    let sigma2 = rss / (n - 3.0);
    let amplitude = a.hypot(b);
    let var_amp = if amplitude > 0.0 {
        sigma2 * (a * a * inv[(0, 0)] + 2.0 * a * b * inv[(0, 1)] + b * b * inv[(1, 1)]) / (amplitude * amplitude)
    } else {
        sigma2 * 0.5 * (inv[(0, 0)] + inv[(1, 1)])
    };
    let amplitude_err = var_amp.max(0.0).sqrt();
    Ok(SinusoidFit {
        amplitude,
        phase: phase::arg(a, b),
        offset: c,
        residual_rms: (rss / n).sqrt(),
        amplitude_err,
        degenerate: !(amplitude > sigmas * amplitude_err) || amplitude == 0.0,
    })
}

/// `(Δφ_DL, Δφ_FWM)` from the three fitted phases; the LO phase cancels.
pub fn phase_shifts(probe: &SinusoidFit, dl: &SinusoidFit, fwm: &SinusoidFit) -> Result<(f64, f64)> {
    for (fit, case) in [(probe, Case::ProbeOnly), (dl, Case::DoubleLambda), (fwm, Case::FwmOnly)] {
        if fit.degenerate {
            return Err(Error::DegenerateFit { case });
        }
    }
    Ok((phase::wrap(dl.phase - probe.phase), phase::wrap(fwm.phase - probe.phase)))
}

/// Volts-to-quadrature scale `s` such that the scaled peak values of a
/// vacuum burst have unit variance.
pub fn calibrate_vacuum(trace: &HomodyneTrace) -> Result<f64> {
    let shots = split_shots(trace)?;
    let mut values = Vec::new();
    for shot in &shots {
        let peaks = extract_peaks(shot, &trace.schedule, &trace.scan)?;
        values.extend(peaks.iter().flatten().map(|p| p.1));
    }
    if values.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: values.len() });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    // A constant trace leaves only rounding noise in the variance.
    if !(var > 1e-24 * mean * mean) || var == 0.0 {
        return Err(Error::Calibration);
    }
    Ok(1.0 / var.sqrt())
}

enum ShotOutcome {
    Kept(Vec<QuadratureRecord>, bool),
    Excluded,
}

fn shot_records(shot: &Shot, schedule: &PulseSchedule, scan: &ScanConfig, scale: f64, opts: &ExtractOptions) -> Result<ShotOutcome> {
    let peaks = extract_peaks(shot, schedule, scan)?;
    let omega = scan.omega();
    let mut fits = Vec::with_capacity(3);
    for case in Case::ALL {
        let pts: Vec<(f64, f64)> = peaks[case.index()].iter().map(|&(t, v)| (t, scale * v)).collect();
        fits.push(fit_sinusoid_with(&pts, omega, opts.degenerate_sigmas)?);
    }
    let (probe, dl, fwm) = (&fits[0], &fits[1], &fits[2]);
    if probe.degenerate || fwm.degenerate {
        return Ok(ShotOutcome::Excluded);
    }
    let dphi_dl = phase::wrap(dl.phase - probe.phase);
    let dphi_fwm = phase::wrap(fwm.phase - probe.phase);
    let theta0 = match opts.reference {
        PhaseReference::Probe => probe.phase,
        PhaseReference::Lo => 0.0,
    };
    let mut records = Vec::with_capacity(3);
    for case in Case::ALL {
        let points: Vec<(f64, f64)> = peaks[case.index()].iter().map(|&(t, v)| (omega * t - theta0, scale * v)).collect();
        let fit = fit_sinusoid_with(&points, 1.0, opts.degenerate_sigmas)?;
        records.push(QuadratureRecord { scan_id: shot.scan_id, case, points, fit, dphi_fwm, dphi_dl });
    }
    Ok(ShotOutcome::Kept(records, dl.degenerate))
}

/// Converts shots into calibrated quadrature records, three per kept shot.
///
/// A shot is excluded when its probe-only or FWM-only fit is degenerate,
/// since Δφ_FWM is then undefined. A degenerate double-Λ fit is only counted:
/// its quadratures are still valid samples of the output state.
pub fn to_quadrature_records(
    shots: &[Shot],
    schedule: &PulseSchedule,
    scan: &ScanConfig,
    scale: f64,
    opts: &ExtractOptions,
) -> Result<Extraction> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParams("calibration scale must be positive".into()));
    }
    let outcomes: Vec<ShotOutcome> = shots
        .par_iter()
        .map(|s| shot_records(s, schedule, scan, scale, opts))
        .collect::<Result<_>>()?;
    let mut ex = Extraction::default();
    for o in outcomes {
        match o {
            ShotOutcome::Kept(r, dl_degenerate) => {
                ex.records.extend(r);
                ex.degenerate_dl += dl_degenerate as usize;
            }
            ShotOutcome::Excluded => ex.excluded_shots += 1,
        }
    }
    Ok(ex)
}

/// Probe-only records of a trace whose FWM-only pulses carry no field, such as
/// a burst taken without the atomic medium. Only the probe fit decides
/// exclusion; both phase shifts are recorded as zero.
pub fn extract_probe_only(trace: &HomodyneTrace, scale: f64, opts: &ExtractOptions) -> Result<Extraction> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParams("calibration scale must be positive".into()));
    }
    let shots = split_shots(trace)?;
    let omega = trace.scan.omega();
    let case = Case::ProbeOnly;
    let outcomes: Vec<Option<QuadratureRecord>> = shots
        .par_iter()
        .map(|shot| {
            let peaks = extract_peaks(shot, &trace.schedule, &trace.scan)?;
            let raw: Vec<(f64, f64)> = peaks[case.index()].iter().map(|&(t, v)| (t, scale * v)).collect();
            let probe = fit_sinusoid_with(&raw, omega, opts.degenerate_sigmas)?;
            if probe.degenerate {
                return Ok(None);
            }
            let theta0 = match opts.reference {
                PhaseReference::Probe => probe.phase,
                PhaseReference::Lo => 0.0,
            };
            let points: Vec<(f64, f64)> = raw.iter().map(|&(t, x)| (omega * t - theta0, x)).collect();
            let fit = fit_sinusoid_with(&points, 1.0, opts.degenerate_sigmas)?;
            Ok(Some(QuadratureRecord { scan_id: shot.scan_id, case, points, fit, dphi_fwm: 0.0, dphi_dl: 0.0 }))
        })
        .collect::<Result<_>>()?;
    let mut ex = Extraction::default();
    for o in outcomes {
        match o {
            Some(r) => ex.records.push(r),
            None => ex.excluded_shots += 1,
        }
    }
    Ok(ex)
}

/// Splits, calibrates and fits a whole trace.
pub fn extract_trace(trace: &HomodyneTrace, scale: f64, opts: &ExtractOptions) -> Result<Extraction> {
    let shots = split_shots(trace)?;
    to_quadrature_records(&shots, &trace.schedule, &trace.scan, scale, opts)
}

/// Edges `(lo, hi]` of bin `k` out of `n_bins` over (−π, π].
pub fn bin_edges(k: usize, n_bins: usize) -> (f64, f64) {
    let w = TAU / n_bins as f64;
    let hi = if k + 1 == n_bins { PI } else { -PI + (k + 1) as f64 * w };
    (-PI + k as f64 * w, hi)
}

/// Bin holding `x` under the half-open `(lo, hi]` rule.
pub fn bin_index(x: f64, n_bins: usize) -> usize {
    let x = phase::wrap(x);
    let w = TAU / n_bins as f64;
    let mut k = (((x + PI) / w).ceil() as usize).clamp(1, n_bins) - 1;
    // Rounding in the division can misplace values sitting on an edge.
    loop {
        let (lo, hi) = bin_edges(k, n_bins);
        if x <= lo && k > 0 {
            k -= 1;
        } else if x > hi && k + 1 < n_bins {
            k += 1;
        } else {
            return k;
        }
    }
}

/// Groups records by `dphi_fwm` into `n_bins` uniform bins.
pub fn bin_records(records: &[QuadratureRecord], n_bins: usize) -> Result<Vec<PhaseBin>> {
    if n_bins == 0 {
        return Err(Error::Config("n_bins must be at least 1".into()));
    }
    let mut bins: Vec<PhaseBin> = (0..n_bins)
        .map(|index| {
            let (lo, hi) = bin_edges(index, n_bins);
            PhaseBin { index, lo, hi, records: Default::default() }
        })
        .collect();
    for r in records {
        bins[bin_index(r.dphi_fwm, n_bins)].records[r.case.index()].push(r.clone());
    }
    Ok(bins)
}
