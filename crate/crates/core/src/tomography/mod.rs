//! Fock-basis state reconstruction from homodyne data and derived metrics.
//!
//! Quadratures follow `X_θ = a e^{−iθ} + a† e^{iθ}` with vacuum variance 1,
//! so a coherent state `|α⟩` gives `⟨X_θ⟩ = 2|α|cos(θ − arg α)` and its
//! Wigner function peaks at `(x, p) = (2 Re α, 2 Im α)`.

mod bootstrap;
mod density;
mod fock;
mod metrics;
mod mle;
mod wigner;

pub use bootstrap::{bootstrap_errors, BootstrapSummary, DEFAULT_RESAMPLES, MIN_BOOTSTRAP_POINTS};
pub use density::DensityMatrix;
pub use fock::{fock_wavefunction, fock_wavefunctions, povm_element, quadrature_vector};
pub use metrics::{
    coherent_dm, coherent_overlap, coherent_vector, fidelity, mean_field, mean_photon, pure_fidelity, purity, MAX_TRUNCATION_LOSS,
};
pub use mle::{
    log_likelihood, mle_reconstruct, mle_reconstruct_from, MleOptions, MleResult, QuadratureDataset, DEFAULT_CUTOFF, DEFAULT_MAX_ITER,
    DEFAULT_TOL,
};
pub use wigner::{axis, default_axis, wigner, wigner_point, WignerGrid};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A metric with its bootstrap standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub err: f64,
}

/// Reconstruction of one dataset with its metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bin: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub case: Option<crate::extract::Case>,
    pub points: usize,
    pub cutoff: usize,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub monotone: bool,
    /// Fidelity with the reference input state, when one is given.
    pub fidelity_vs_input: Option<Estimate>,
    pub coherent_overlap: Estimate,
    pub purity: Estimate,
    pub mean_photon: Estimate,
    /// Weight on the top Fock level, a truncation diagnostic.
    pub top_population: f64,
    pub wigner_max: (f64, f64),
    pub bootstrap_used: usize,
    pub bootstrap_failed: usize,
    #[serde(skip)]
    pub rho: Option<DensityMatrix>,
    #[serde(skip)]
    pub wigner: Option<WignerGrid>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReportOptions {
    pub mle: MleOptions,
    pub resamples: usize,
    pub seed: u64,
    /// Half-width of the Wigner grid.
    pub wigner_extent: f64,
    pub wigner_spacing: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { mle: MleOptions::default(), resamples: DEFAULT_RESAMPLES, seed: 0, wigner_extent: 10.0, wigner_spacing: 0.1 }
    }
}

fn metric_values(rho: &DensityMatrix, input: Option<&DensityMatrix>) -> Vec<f64> {
    let mut v = vec![coherent_overlap(rho), purity(rho), mean_photon(rho)];
    if let Some(i) = input {
        v.push(fidelity(i, rho).unwrap_or(f64::NAN));
    }
    v
}

/// Reconstructs `data`, evaluates every metric and attaches bootstrap errors.
///
/// `input` must have the reconstruction cutoff.
pub fn reconstruct_report(data: &QuadratureDataset, input: Option<&DensityMatrix>, opts: &ReportOptions) -> Result<ReconstructionReport> {
    if let Some(i) = input.filter(|i| i.cutoff() != opts.mle.cutoff) {
        return Err(Error::DimensionMismatch(i.cutoff(), opts.mle.cutoff));
    }
    let res = mle_reconstruct(data, &opts.mle)?;
    let values = metric_values(&res.rho, input);
    let (errs, used, failed, monotone) = if opts.resamples > 0 && data.len() >= MIN_BOOTSTRAP_POINTS {
        let b = bootstrap_errors(data, &opts.mle, opts.resamples, opts.seed, Some(&res.rho), |r| metric_values(r, input))?;
        (b.std, b.used, b.failed, b.monotone)
    } else {
        (vec![0.0; values.len()], 0, 0, true)
    };
    let est = |k: usize| Estimate { value: values[k], err: errs.get(k).copied().unwrap_or(0.0) };
    let ax = axis(opts.wigner_extent, opts.wigner_spacing);
    let grid = wigner(&res.rho, &ax, &ax);
    Ok(ReconstructionReport {
        bin: data.source.map(|s| s.0),
        case: data.source.map(|s| s.1),
        points: data.len(),
        cutoff: res.rho.cutoff(),
        log_likelihood: res.log_likelihood,
        iterations: res.iterations,
        converged: res.converged,
        monotone: res.monotone && monotone,
        fidelity_vs_input: input.map(|_| est(3)),
        coherent_overlap: est(0),
        purity: est(1),
        mean_photon: est(2),
        top_population: res.rho.get(res.rho.cutoff() - 1, res.rho.cutoff() - 1).re,
        wigner_max: grid.max_location(),
        bootstrap_used: used,
        bootstrap_failed: failed,
        rho: Some(res.rho),
        wigner: Some(grid),
    })
}
