//! Run configuration for the full simulate → extract → reconstruct chain.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::atomic::{AtomicParams, FieldSet, PAPER_DEFAULT};
use crate::error::{Error, Result};
use crate::extract::{ExtractOptions, DEFAULT_BINS};
use crate::io::TraceFormat;
use crate::synth::{DriftModel, NoiseConfig, PulseSchedule, ScanConfig, PAPER_SAMPLE_RATE};
use crate::tomography::{MleOptions, DEFAULT_CUTOFF, DEFAULT_MAX_ITER, DEFAULT_RESAMPLES, DEFAULT_TOL};

/// Input probe amplitude `|α|` of the calibrated run.
pub const PAPER_PROBE_ALPHA: f64 = 0.71;
/// Measured FWM phase at which the double-Λ output has unit gain.
pub const UNIT_GAIN_DPHI: f64 = 2.06;
/// Signal/probe input amplitude ratio giving unit gain at [`UNIT_GAIN_DPHI`]
/// for the `paper-default` medium.
pub const PAPER_SIGNAL_RATIO: f64 = 1.936_683_121_633_643;

/// Name of the built-in run configuration.
pub const RUN_PAPER_DEFAULT: &str = "paper-default";

/// Environment variable naming a directory searched for `<name>.json` run
/// configs. Atomic presets use [`crate::atomic::PRESET_DIR_ENV`].
pub const CONFIG_DIR_ENV: &str = "DLPHASE_CONFIG_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Named atomic preset; ignored when `atomic` is given.
    pub preset: Option<String>,
    /// Inline atomic parameters.
    pub atomic: Option<AtomicParams>,
    pub fields: FieldSet,
    pub schedule: PulseSchedule,
    pub scan: ScanConfig,
    pub noise: NoiseConfig,
    pub extract: ExtractOptions,
    /// Duration of the vacuum calibration burst in seconds.
    pub vacuum_burst_len: f64,
    pub n_bins: usize,
    pub cutoff: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub bootstrap: usize,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub trace_format: TraceFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: Some(PAPER_DEFAULT.into()),
            atomic: None,
            fields: FieldSet::calibrated(PAPER_PROBE_ALPHA, PAPER_PROBE_ALPHA * PAPER_SIGNAL_RATIO),
            schedule: PulseSchedule::default(),
            scan: ScanConfig::default(),
            noise: NoiseConfig::default(),
            extract: ExtractOptions::default(),
            vacuum_burst_len: 0.25,
            n_bins: DEFAULT_BINS,
            cutoff: DEFAULT_CUTOFF,
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            bootstrap: DEFAULT_RESAMPLES,
            seed: None,
            output: None,
            trace_format: TraceFormat::Binary,
        }
    }
}

impl RunConfig {
    /// Built-in configurations by name.
    ///
    /// `paper-default` resamples the optical phases on every scan so that a
    /// single desk-scale burst covers all Δφ_FWM bins.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            RUN_PAPER_DEFAULT => Ok(RunConfig {
                noise: NoiseConfig { drift_model: DriftModel::UniformResample, ..NoiseConfig::default() },
                ..RunConfig::default()
            }),
            _ => Err(Error::UnknownPreset(name.into())),
        }
    }

    /// Loads a JSON file from a path, or a built-in configuration by name when
    /// no such file exists. Relative names are also looked up in the
    /// directory named by [`CONFIG_DIR_ENV`].
    pub fn load(name: &str) -> Result<Self> {
        let dir = std::env::var_os(CONFIG_DIR_ENV).map(PathBuf::from);
        Self::load_from(name, dir.as_deref())
    }

    /// [`RunConfig::load`] with an explicit config directory.
    pub fn load_from(name: &str, preset_dir: Option<&Path>) -> Result<Self> {
        let path = Path::new(name);
        if path.is_file() {
            return Self::from_json_file(path);
        }
        if let Some(dir) = preset_dir.filter(|_| path.is_relative()) {
            let file = if name.ends_with(".json") { name.to_string() } else { format!("{name}.json") };
            let candidate = dir.join(file);
            if candidate.is_file() {
                return Self::from_json_file(&candidate);
            }
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or(name);
        if name.ends_with(".json") && stem != RUN_PAPER_DEFAULT {
            return Err(Error::Config(format!("config file {name} not found")));
        }
        Self::preset(stem)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    /// Resolved atomic parameters.
    pub fn atomic_params(&self) -> Result<AtomicParams> {
        match (&self.atomic, &self.preset) {
            (Some(p), _) => {
                p.validate()?;
                Ok(*p)
            }
            (None, Some(name)) => AtomicParams::preset(name),
            (None, None) => Err(Error::Config("either `preset` or `atomic` is required".into())),
        }
    }

    pub fn mle(&self) -> MleOptions {
        MleOptions { cutoff: self.cutoff, max_iter: self.max_iter, tol: self.tol }
    }

    pub fn set_paper_scale(&mut self) {
        self.scan.sample_rate = PAPER_SAMPLE_RATE;
    }

    pub fn validate(&self) -> Result<()> {
        self.atomic_params()?;
        self.fields.validate()?;
        self.schedule.validate()?;
        self.scan.validate(&self.schedule)?;
        self.noise.validate()?;
        if !(self.vacuum_burst_len >= self.scan.scan_period()) {
            return Err(Error::Config("vacuum_burst_len must cover at least one scan".into()));
        }
        if self.n_bins == 0 {
            return Err(Error::Config("n_bins must be at least 1".into()));
        }
        if self.cutoff == 0 || self.max_iter == 0 || !(self.tol > 0.0) {
            return Err(Error::Config("cutoff and max_iter must be positive and tol > 0".into()));
        }
        if !(self.extract.degenerate_sigmas >= 0.0) {
            return Err(Error::Config("degenerate_sigmas must be non-negative".into()));
        }
        Ok(())
    }
}
