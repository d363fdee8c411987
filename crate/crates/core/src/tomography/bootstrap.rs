use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::density::DensityMatrix;
use super::mle::{mle_reconstruct_from, MleOptions, QuadratureDataset};
use crate::error::{Error, Result};

pub const DEFAULT_RESAMPLES: usize = 100;
pub const MIN_BOOTSTRAP_POINTS: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub struct BootstrapSummary {
    /// Sample standard deviation of each metric over converged resamples.
    pub std: Vec<f64>,
    pub used: usize,
    /// Resamples that failed or did not converge.
    pub failed: usize,
    /// Fewer than two usable resamples; `std` is zero.
    pub insufficient: bool,
    /// All resampled reconstructions kept a non-decreasing likelihood.
    pub monotone: bool,
}

/// Bootstrap spread of `metric` over `resamples` resampled datasets.
///
/// Resample `r` draws from its own ChaCha8 stream of `seed`, so the result
/// does not depend on scheduling. Each reconstruction starts from `start`
/// when given.
pub fn bootstrap_errors<F>(
    data: &QuadratureDataset,
    opts: &MleOptions,
    resamples: usize,
    seed: u64,
    start: Option<&DensityMatrix>,
    metric: F,
) -> Result<BootstrapSummary>
where
    F: Fn(&DensityMatrix) -> Vec<f64> + Sync,
{
    if data.len() < MIN_BOOTSTRAP_POINTS {
        return Err(Error::InsufficientData { needed: MIN_BOOTSTRAP_POINTS, got: data.len() });
    }
    let runs: Vec<Option<(Vec<f64>, bool)>> = (0..resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let n = data.len();
            let pairs = (0..n).map(|_| data.pairs[rng.random_range(0..n)]).collect();
            let sample = QuadratureDataset { pairs, source: data.source };
            match mle_reconstruct_from(&sample, opts, start) {
                Ok(res) if res.converged => Some((metric(&res.rho), res.monotone)),
                _ => None,
            }
        })
        .collect();
    let ok: Vec<&(Vec<f64>, bool)> = runs.iter().flatten().collect();
    let failed = resamples - ok.len();
    let monotone = ok.iter().all(|r| r.1);
    let dim = ok.first().map_or(0, |r| r.0.len());
    if ok.len() < 2 {
        return Ok(BootstrapSummary { std: vec![0.0; dim], used: ok.len(), failed, insufficient: true, monotone });
    }
    let m = ok.len() as f64;
    let std = (0..dim)
        .map(|k| {
            let mean = ok.iter().map(|r| r.0[k]).sum::<f64>() / m;
            (ok.iter().map(|r| (r.0[k] - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
        })
        .collect();
    Ok(BootstrapSummary { std, used: ok.len(), failed, insufficient: false, monotone })
}
