//! Synthetic balanced-homodyne bursts for the three-pulse sequence.
//!
//! Every 60 µs cycle carries a probe-only pulse, a double-Λ pulse (probe and
//! signal) and an FWM-only pulse (signal alone), while the local oscillator
//! phase is swept linearly through 2π once per scan. Each pulse is one
//! temporal mode, so it contributes a single quadrature sample
//! `X_θ ~ N(2|α|cos(θ − φ), vacuum_std²)` held over the pulse window. The
//! pulse sequence restarts at the beginning of every scan.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atomic::{self, AtomicParams, FieldSet, PhasorDecomposition, DEFAULT_STEPS};
use crate::error::{Error, Result};
use crate::extract::Case;
use crate::phase;

/// Sample rate of the desk-scale default.
pub const DESK_SAMPLE_RATE: f64 = 1e7;
/// Sample rate of the original digitizer.
pub const PAPER_SAMPLE_RATE: f64 = 1e8;

/// Timing of the pulse triplet inside one cycle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PulseSchedule {
    /// Pulse duration in seconds.
    pub pulse_len: f64,
    /// Delay between consecutive cases in seconds.
    pub gap: f64,
    /// Repetition period of the triplet in seconds.
    pub cycle: f64,
}

impl Default for PulseSchedule {
    fn default() -> Self {
        PulseSchedule { pulse_len: 1.5e-6, gap: 20e-6, cycle: 60e-6 }
    }
}

impl PulseSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_len > 0.0 && self.gap > 0.0 && self.cycle > 0.0) {
            return Err(Error::Config("schedule durations must be positive".into()));
        }
        if self.pulse_len >= self.gap {
            return Err(Error::Config("pulse_len must be shorter than gap".into()));
        }
        if self.gap > self.cycle / 3.0 * (1.0 + 1e-9) {
            return Err(Error::Config("three cases separated by gap do not fit in one cycle".into()));
        }
        Ok(())
    }

    /// Complete triplets that fit in one scan.
    pub fn triplets_per_scan(&self, scan_period: f64) -> usize {
        (scan_period / self.cycle * (1.0 + 1e-12)).floor() as usize
    }

    /// Onset of `case` in triplet `k`, relative to the scan start.
    pub fn onset(&self, k: usize, case: Case) -> f64 {
        k as f64 * self.cycle + case.index() as f64 * self.cycle / 3.0
    }

    /// Center time of a pulse, relative to the scan start.
    pub fn center(&self, k: usize, case: Case) -> f64 {
        self.onset(k, case) + 0.5 * self.pulse_len
    }

    /// Sample index range `[start, end)` of a pulse, relative to the scan start.
    pub fn window(&self, k: usize, case: Case, sample_rate: f64) -> (usize, usize) {
        let start = (self.onset(k, case) * sample_rate).round() as usize;
        let len = ((self.pulse_len * sample_rate).round() as usize).max(1);
        (start, start + len)
    }
}

/// Local-oscillator sweep and digitizer settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// LO sweep frequency in Hz; one full 2π sweep per period.
    pub scan_freq: f64,
    /// Burst duration in seconds.
    pub burst_len: f64,
    /// Digitizer sample rate in Hz.
    pub sample_rate: f64,
    /// Detector gain in volts per quadrature unit (the LO amplitude).
    pub lo_amplitude: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig { scan_freq: 200.0, burst_len: 1.3, sample_rate: DESK_SAMPLE_RATE, lo_amplitude: 0.05 }
    }
}

impl ScanConfig {
    pub fn scan_period(&self) -> f64 {
        1.0 / self.scan_freq
    }

    pub fn omega(&self) -> f64 {
        TAU * self.scan_freq
    }

    pub fn n_samples(&self) -> usize {
        (self.burst_len * self.sample_rate).round() as usize
    }

    pub fn samples_per_scan(&self) -> usize {
        (self.scan_period() * self.sample_rate).round() as usize
    }

    /// LO phase at `t` seconds after the start of a scan (sawtooth sweep).
    pub fn lo_phase(&self, t_in_scan: f64) -> f64 {
        self.omega() * t_in_scan
    }

    pub fn validate(&self, schedule: &PulseSchedule) -> Result<()> {
        if !(self.scan_freq > 0.0 && self.burst_len > 0.0 && self.sample_rate > 0.0) {
            return Err(Error::Config("scan frequency, burst length and sample rate must be positive".into()));
        }
        if !(self.lo_amplitude > 0.0) {
            return Err(Error::Config("lo_amplitude must be positive".into()));
        }
        if self.sample_rate * schedule.pulse_len < 10.0 * (1.0 - 1e-9) {
            return Err(Error::Config("fewer than 10 samples per pulse".into()));
        }
        if schedule.triplets_per_scan(self.scan_period()) == 0 {
            return Err(Error::Config("scan period shorter than one pulse cycle".into()));
        }
        let spp = self.samples_per_scan();
        let last = schedule.window(schedule.triplets_per_scan(self.scan_period()) - 1, Case::FwmOnly, self.sample_rate);
        if last.1 > spp {
            return Err(Error::Config("pulse schedule overruns the scan".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DriftModel {
    /// Gaussian increment of `drift_std_per_scan` per scan.
    #[default]
    RandomWalk,
    /// Fresh uniform phase on every scan.
    UniformResample,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// Quadrature noise per pulse, in quadrature units (1 = shot noise).
    pub vacuum_std: f64,
    /// White detector noise per sample, in volts.
    pub electronic_std: f64,
    /// Drift of the probe phase and of Δφ_FWM between scans, radians.
    pub drift_std_per_scan: f64,
    pub drift_model: DriftModel,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig { vacuum_std: 1.0, electronic_std: 0.0, drift_std_per_scan: 0.1, drift_model: DriftModel::RandomWalk }
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        NoiseConfig { vacuum_std: 0.0, electronic_std: 0.0, drift_std_per_scan: 0.0, drift_model: DriftModel::RandomWalk }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.vacuum_std, self.electronic_std, self.drift_std_per_scan];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("noise standard deviations must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// Ground truth for one scan. Amplitudes are in quadrature units (`2|α|`),
/// phases are the output phases the extraction measures.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub scan_id: usize,
    /// Probe-only output phase relative to the LO at scan start.
    pub phi_p: f64,
    /// FWM-only output phase relative to the probe-only output.
    pub dphi_fwm: f64,
    /// Double-Λ output phase relative to the probe-only output.
    pub dphi_dl: f64,
    #[serde(rename = "E_E")]
    pub e_probe: f64,
    #[serde(rename = "E_F")]
    pub e_fwm: f64,
}

impl TruthRecord {
    /// Quadrature amplitude and LO-referenced phase of each case.
    pub fn case_phasor(&self, case: Case) -> (f64, f64) {
        match case {
            Case::ProbeOnly => (self.e_probe, self.phi_p),
            Case::FwmOnly => (self.e_fwm, phase::wrap(self.phi_p + self.dphi_fwm)),
            Case::DoubleLambda => {
                let sum = Complex64::from_polar(self.e_probe, 0.0) + Complex64::from_polar(self.e_fwm, self.dphi_fwm);
                (sum.norm(), phase::wrap(self.phi_p + self.dphi_dl))
            }
        }
    }
}

/// One digitized burst.
#[derive(Clone, Debug, PartialEq)]
pub struct HomodyneTrace {
    pub samples: Vec<f64>,
    pub schedule: PulseSchedule,
    pub scan: ScanConfig,
    /// Present for synthetic traces.
    pub truth: Option<Vec<TruthRecord>>,
    pub seed: u64,
}

impl HomodyneTrace {
    pub fn sample_rate(&self) -> f64 {
        self.scan.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.scan.sample_rate
    }
}

/// Mean homodyne voltage `E·E_LO·cos(θ − φ)`.
pub fn mean_peak_voltage(e_field: f64, e_lo: f64, theta: f64, phi: f64) -> f64 {
    e_field * e_lo * (theta - phi).cos()
}

/// Advances a drifting phase by one scan.
pub fn drift_step<R: Rng + ?Sized>(state: f64, noise: &NoiseConfig, rng: &mut R) -> f64 {
    match noise.drift_model {
        DriftModel::RandomWalk => {
            if noise.drift_std_per_scan == 0.0 {
                return state;
            }
            let z: f64 = rng.sample(StandardNormal);
            state + noise.drift_std_per_scan * z
        }
        DriftModel::UniformResample => {
            let u: f64 = rng.random();
            PI - TAU * u
        }
    }
}

/// Per-scan output phasors (complex amplitudes in units of `α`).
#[derive(Clone, Copy, Debug)]
struct ScanOutputs {
    probe: Complex64,
    dl: Complex64,
    fwm: Complex64,
}

impl ScanOutputs {
    fn get(&self, case: Case) -> Complex64 {
        match case {
            Case::ProbeOnly => self.probe,
            Case::DoubleLambda => self.dl,
            Case::FwmOnly => self.fwm,
        }
    }
}

fn scan_outputs(scan_id: usize, transfer: &atomic::TransferMatrix, fields: &FieldSet, phi_p: f64, dphi_in: f64) -> Result<(ScanOutputs, TruthRecord)> {
    let probe_in = Complex64::from_polar(fields.probe, phi_p);
    let phi_s = dphi_in + phi_p - fields.phi_c2 + fields.phi_c1;
    let signal_in = Complex64::from_polar(fields.signal, phi_s);
    let probe = transfer.probe_out(probe_in, Complex64::new(0.0, 0.0));
    let fwm = transfer.probe_out(Complex64::new(0.0, 0.0), signal_in);

    let arg_or_zero = |z: Complex64| if z.norm_sqr() > 0.0 { phase::arg(z.re, z.im) } else { 0.0 };
    let phi_probe = arg_or_zero(probe);
    let dphi_fwm = if probe.norm_sqr() > 0.0 && fwm.norm_sqr() > 0.0 {
        phase::wrap(arg_or_zero(fwm) - phi_probe)
    } else {
        0.0
    };
    let (dl, dphi_dl) = if probe.norm_sqr() > 0.0 {
        let out = atomic::dl_interference(&PhasorDecomposition {
            e_probe: probe.norm(),
            e_fwm: fwm.norm(),
            dphi_fwm,
        })?;
        (Complex64::from_polar(out.amplitude * probe.norm(), phi_probe + out.dphi_dl), out.dphi_dl)
    } else {
        (fwm, 0.0)
    };
    let truth = TruthRecord {
        scan_id,
        phi_p: phi_probe,
        dphi_fwm,
        dphi_dl,
        e_probe: 2.0 * probe.norm(),
        e_fwm: 2.0 * fwm.norm(),
    };
    Ok((ScanOutputs { probe, dl, fwm }, truth))
}

/// Independent RNG stream for scan `scan_id`; stream 0 drives the phase drift.
fn scan_rng(seed: u64, scan_id: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(scan_id as u64 + 1);
    rng
}

/// Synthesizes one burst. Probe and signal amplitudes in `fields` are read as
/// coherent-state amplitudes `|α|` of the input pulses; the medium's linear
/// response maps them to the three output cases.
pub fn synth_burst(
    params: &AtomicParams,
    fields: &FieldSet,
    schedule: &PulseSchedule,
    scan: &ScanConfig,
    noise: &NoiseConfig,
    seed: u64,
) -> Result<HomodyneTrace> {
    params.validate()?;
    fields.validate()?;
    schedule.validate()?;
    scan.validate(schedule)?;
    noise.validate()?;

    let transfer = atomic::transfer_matrix(params, fields, DEFAULT_STEPS)?;
    let n_samples = scan.n_samples();
    let spp = scan.samples_per_scan();
    let n_scans = n_samples.div_ceil(spp);

    let mut drift_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut phi_p = fields.phi_p;
    let mut dphi_in = fields.dphi_fwm();
    let mut outputs = Vec::with_capacity(n_scans);
    let mut truth = Vec::with_capacity(n_scans);
    for s in 0..n_scans {
        phi_p = drift_step(phi_p, noise, &mut drift_rng);
        dphi_in = drift_step(dphi_in, noise, &mut drift_rng);
        let (out, t) = scan_outputs(s, &transfer, fields, phi_p, dphi_in)?;
        outputs.push(out);
        truth.push(t);
    }

    let triplets = schedule.triplets_per_scan(scan.scan_period());
    let fs = scan.sample_rate;
    let lo = scan.lo_amplitude;
    let mut samples = vec![0.0; n_samples];
    samples.par_chunks_mut(spp).enumerate().for_each(|(s, chunk)| {
        let mut rng = scan_rng(seed, s);
        let out = &outputs[s];
        for k in 0..triplets {
            for case in Case::ALL {
                let (start, end) = schedule.window(k, case, fs);
                if start >= chunk.len() {
                    continue;
                }
                let a = out.get(case);
                let theta = scan.lo_phase(schedule.center(k, case));
                let z: f64 = if noise.vacuum_std > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                let v = mean_peak_voltage(2.0 * a.norm(), lo, theta, a.arg()) + lo * noise.vacuum_std * z;
                let stop = end.min(chunk.len());
                for x in &mut chunk[start..stop] {
                    *x = v;
                }
            }
        }
        if noise.electronic_std > 0.0 {
            for x in chunk.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x += noise.electronic_std * z;
            }
        }
    });

    Ok(HomodyneTrace { samples, schedule: *schedule, scan: *scan, truth: Some(truth), seed })
}
