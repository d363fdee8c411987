//! File formats for traces, truth sidecars, quadrature records, bin
//! manifests, density matrices and Wigner grids.
//!
//! Every writer goes through [`write_atomic`], so a reader never sees a
//! partially written file. Floats are written in shortest round-trip form and
//! read back bit-exactly.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extract::{Case, PhaseBin, QuadratureRecord};
use crate::synth::{HomodyneTrace, PulseSchedule, ScanConfig, TruthRecord};
use crate::tomography::{DensityMatrix, WignerGrid};

const TRACE_MAGIC: &[u8; 8] = b"DLTRACE\0";
const TRACE_VERSION: u32 = 1;

/// On-disk trace encodings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum TraceFormat {
    /// Magic, version, JSON header, little-endian f64 samples.
    #[default]
    Binary,
    /// `# key=value` header lines followed by `time,voltage` rows.
    Csv,
}

impl TraceFormat {
    pub fn extension(self) -> &'static str {
        match self {
            TraceFormat::Binary => "bin",
            TraceFormat::Csv => "csv",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceHeader {
    schedule: PulseSchedule,
    scan: ScanConfig,
    seed: u64,
    n_samples: usize,
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    write_atomic_with(path, |w| w.write_all(bytes))
}

fn temp_path(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp{}", std::process::id()))
}

fn write_atomic_with<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = temp_path(path);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        let f = w.into_inner().map_err(|e| e.into_error())?;
        f.sync_all()
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::parse(path, e.line(), e.to_string()))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for r in rows {
            w.serialize(r).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    write_atomic(path, &buf)
}

fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

/// Writes a trace in the requested format. Truth records are not included;
/// see [`write_truth`].
pub fn write_trace(path: &Path, trace: &HomodyneTrace, format: TraceFormat) -> Result<()> {
    match format {
        TraceFormat::Binary => {
            let header = serde_json::to_vec(&TraceHeader {
                schedule: trace.schedule,
                scan: trace.scan,
                seed: trace.seed,
                n_samples: trace.samples.len(),
            })?;
            write_atomic_with(path, |w| {
                w.write_all(TRACE_MAGIC)?;
                w.write_all(&TRACE_VERSION.to_le_bytes())?;
                w.write_all(&(header.len() as u64).to_le_bytes())?;
                w.write_all(&header)?;
                for v in &trace.samples {
                    w.write_all(&v.to_le_bytes())?;
                }
                Ok(())
            })
        }
        TraceFormat::Csv => write_atomic_with(path, |w| {
            let s = &trace.schedule;
            let c = &trace.scan;
            writeln!(w, "# format=dlphase-trace")?;
            writeln!(w, "# version={TRACE_VERSION}")?;
            writeln!(w, "# sample_rate={}", c.sample_rate)?;
            writeln!(w, "# scan_freq={}", c.scan_freq)?;
            writeln!(w, "# burst_len={}", c.burst_len)?;
            writeln!(w, "# lo_amplitude={}", c.lo_amplitude)?;
            writeln!(w, "# pulse_len={}", s.pulse_len)?;
            writeln!(w, "# gap={}", s.gap)?;
            writeln!(w, "# cycle={}", s.cycle)?;
            writeln!(w, "# seed={}", trace.seed)?;
            writeln!(w, "# n_samples={}", trace.samples.len())?;
            writeln!(w, "time,voltage")?;
            for (i, v) in trace.samples.iter().enumerate() {
                writeln!(w, "{},{}", i as f64 / c.sample_rate, v)?;
            }
            Ok(())
        }),
    }
}

/// Reads a trace, detecting the format from its first bytes.
pub fn read_trace(path: &Path) -> Result<HomodyneTrace> {
    let mut file = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let head = file.fill_buf().map_err(|e| Error::io(path, e))?;
    if head.starts_with(TRACE_MAGIC) {
        read_binary_trace(path, file)
    } else {
        read_csv_trace(path, file)
    }
}

fn read_binary_trace(path: &Path, mut r: BufReader<File>) -> Result<HomodyneTrace> {
    let io = |e| Error::io(path, e);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    let mut v = [0u8; 4];
    r.read_exact(&mut v).map_err(io)?;
    if u32::from_le_bytes(v) != TRACE_VERSION {
        return Err(Error::parse(path, 0, format!("unsupported trace version {}", u32::from_le_bytes(v))));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(io)?;
    let mut header = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut header).map_err(io)?;
    let h: TraceHeader = serde_json::from_slice(&header).map_err(|e| Error::parse(path, 0, format!("header: {e}")))?;
    let mut bytes = Vec::with_capacity(h.n_samples * 8);
    r.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != h.n_samples * 8 {
        return Err(Error::parse(path, 0, format!("expected {} samples, found {} bytes", h.n_samples, bytes.len())));
    }
    let samples = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(HomodyneTrace { samples, schedule: h.schedule, scan: h.scan, truth: None, seed: h.seed })
}

fn read_csv_trace(path: &Path, r: BufReader<File>) -> Result<HomodyneTrace> {
    let mut schedule = PulseSchedule::default();
    let mut scan = ScanConfig::default();
    let mut seed = None;
    let mut n_samples = None;
    let mut seen = std::collections::HashSet::new();
    let mut lines = r.lines().enumerate();
    let mut samples = Vec::new();
    let mut header_done = false;
    for (idx, line) in lines.by_ref() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if !header_done {
            if let Some(kv) = line.strip_prefix('#') {
                let (k, v) = kv.trim().split_once('=').ok_or_else(|| Error::parse(path, lineno, "expected `# key=value`"))?;
                let num = || v.parse::<f64>().map_err(|_| Error::parse(path, lineno, format!("bad number for `{k}`: {v}")));
                match k {
                    "format" if v == "dlphase-trace" => {}
                    "version" if v == TRACE_VERSION.to_string() => {}
                    "sample_rate" => scan.sample_rate = num()?,
                    "scan_freq" => scan.scan_freq = num()?,
                    "burst_len" => scan.burst_len = num()?,
                    "lo_amplitude" => scan.lo_amplitude = num()?,
                    "pulse_len" => schedule.pulse_len = num()?,
                    "gap" => schedule.gap = num()?,
                    "cycle" => schedule.cycle = num()?,
                    "seed" => seed = Some(v.parse::<u64>().map_err(|_| Error::parse(path, lineno, format!("bad seed: {v}")))?),
                    "n_samples" => n_samples = Some(v.parse::<usize>().map_err(|_| Error::parse(path, lineno, format!("bad n_samples: {v}")))?),
                    _ => return Err(Error::parse(path, lineno, format!("unexpected header entry `{k}={v}`"))),
                }
                seen.insert(k.to_string());
                continue;
            }
            if line.trim() != "time,voltage" {
                return Err(Error::parse(path, lineno, "expected column header `time,voltage`"));
            }
            for key in ["format", "sample_rate", "scan_freq", "burst_len", "lo_amplitude", "pulse_len", "gap", "cycle", "seed"] {
                if !seen.contains(key) {
                    return Err(Error::parse(path, lineno, format!("header is missing `{key}`")));
                }
            }
            header_done = true;
            continue;
        }
        let (_, v) = line.split_once(',').ok_or_else(|| Error::parse(path, lineno, "expected `time,voltage`"))?;
        samples.push(v.trim().parse::<f64>().map_err(|_| Error::parse(path, lineno, format!("bad voltage: {v}")))?);
    }
    if !header_done {
        return Err(Error::parse(path, 0, "missing column header `time,voltage`"));
    }
    if let Some(n) = n_samples {
        if n != samples.len() {
            return Err(Error::parse(path, 0, format!("header declares {n} samples, found {}", samples.len())));
        }
    }
    Ok(HomodyneTrace { samples, schedule, scan, truth: None, seed: seed.unwrap_or(0) })
}

pub fn write_truth(path: &Path, truth: &[TruthRecord]) -> Result<()> {
    write_rows(path, truth)
}

pub fn read_truth(path: &Path) -> Result<Vec<TruthRecord>> {
    read_rows(path)
}

#[derive(Serialize, Deserialize)]
struct RecordRow {
    scan_id: usize,
    case: Case,
    theta: f64,
    x: f64,
    dphi_fwm: f64,
    dphi_dl: f64,
    degenerate: bool,
}

/// One row per quadrature sample: `scan_id,case,theta,x,dphi_fwm,dphi_dl,degenerate`.
pub fn write_records(path: &Path, records: &[QuadratureRecord]) -> Result<()> {
    write_rows(
        path,
        records.iter().flat_map(|r| {
            r.points.iter().map(move |&(theta, x)| RecordRow {
                scan_id: r.scan_id,
                case: r.case,
                theta,
                x,
                dphi_fwm: r.dphi_fwm,
                dphi_dl: r.dphi_dl,
                degenerate: r.fit.degenerate,
            })
        }),
    )
}

/// Reads records back, regrouping consecutive rows of one `(scan_id, case)`
/// and recomputing each fit from its points.
pub fn read_records(path: &Path) -> Result<Vec<QuadratureRecord>> {
    let rows: Vec<RecordRow> = read_rows(path)?;
    let mut out = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let first = &rows[i];
        let mut j = i;
        while j < rows.len() && rows[j].scan_id == first.scan_id && rows[j].case == first.case {
            j += 1;
        }
        let points = rows[i..j].iter().map(|r| (r.theta, r.x)).collect();
        let mut rec = QuadratureRecord::from_points(first.scan_id, first.case, points, first.dphi_fwm, first.dphi_dl)
            .map_err(|e| Error::parse(path, i + 2, e.to_string()))?;
        rec.fit.degenerate = first.degenerate;
        out.push(rec);
        i = j;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinRow {
    pub bin_index: usize,
    pub lo: f64,
    pub hi: f64,
    pub count_probe: usize,
    pub count_dl: usize,
    pub count_fwm: usize,
}

impl From<&PhaseBin> for BinRow {
    fn from(b: &PhaseBin) -> Self {
        BinRow {
            bin_index: b.index,
            lo: b.lo,
            hi: b.hi,
            count_probe: b.count(Case::ProbeOnly),
            count_dl: b.count(Case::DoubleLambda),
            count_fwm: b.count(Case::FwmOnly),
        }
    }
}

/// Bin manifest `bin_index,lo,hi,count_probe,count_dl,count_fwm`; counts are records.
pub fn write_bins(path: &Path, bins: &[PhaseBin]) -> Result<()> {
    write_rows(path, bins.iter().map(BinRow::from))
}

pub fn read_bins(path: &Path) -> Result<Vec<BinRow>> {
    read_rows(path)
}

pub fn write_density(path: &Path, rho: &DensityMatrix) -> Result<()> {
    write_json(path, rho)
}

pub fn read_density(path: &Path) -> Result<DensityMatrix> {
    read_json(path)
}

#[derive(Serialize, Deserialize)]
struct WignerRow {
    x: f64,
    p: f64,
    w: f64,
}

/// `x,p,w` rows with `p` varying fastest.
pub fn write_wigner(path: &Path, grid: &WignerGrid) -> Result<()> {
    let np = grid.p_axis.len();
    write_rows(
        path,
        grid.values.iter().enumerate().map(|(k, &w)| WignerRow { x: grid.x_axis[k / np], p: grid.p_axis[k % np], w }),
    )
}

pub fn read_wigner(path: &Path) -> Result<WignerGrid> {
    let rows: Vec<WignerRow> = read_rows(path)?;
    let mut x_axis: Vec<f64> = Vec::new();
    let mut p_axis: Vec<f64> = Vec::new();
    for r in &rows {
        if x_axis.last() != Some(&r.x) {
            x_axis.push(r.x);
        }
        if x_axis.len() == 1 {
            p_axis.push(r.p);
        }
    }
    if x_axis.len() * p_axis.len() != rows.len() {
        return Err(Error::parse(path, 0, "rows do not form a rectangular grid"));
    }
    Ok(WignerGrid { x_axis, p_axis, values: rows.into_iter().map(|r| r.w).collect() })
}

/// Writes any serializable rows as a CSV table with a header.
pub fn write_table<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_rows(path, rows)
}

pub fn read_table<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_rows(path)
}
