use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::density::DensityMatrix;
use super::fock::quadrature_vector;
use crate::error::{Error, Result};
use crate::extract::Case;

pub const DEFAULT_CUTOFF: usize = 10;
pub const DEFAULT_MAX_ITER: usize = 2000;
pub const DEFAULT_TOL: f64 = 1e-9;

/// Probabilities below this are clamped before taking `1/p` and `ln p`.
const P_FLOOR: f64 = 1e-300;
/// Data points per chunk of the ordered parallel reduction.
const CHUNK: usize = 512;
/// Smallest dilution step tried before declaring a stall.
const MIN_DILUTION: f64 = 1e-10;

/// Homodyne samples `(θ, x)` of one state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadratureDataset {
    pub pairs: Vec<(f64, f64)>,
    /// Bin index and case the data came from.
    pub source: Option<(usize, Case)>,
}

impl QuadratureDataset {
    pub fn new(pairs: Vec<(f64, f64)>) -> Self {
        QuadratureDataset { pairs, source: None }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Width of the smallest arc containing every θ (mod 2π).
    pub fn theta_span(&self) -> f64 {
        use std::f64::consts::TAU;
        let mut t: Vec<f64> = self.pairs.iter().map(|p| p.0.rem_euclid(TAU)).collect();
        if t.len() < 2 {
            return 0.0;
        }
        t.sort_by(f64::total_cmp);
        let mut gap = t[0] + TAU - t[t.len() - 1];
        for w in t.windows(2) {
            gap = gap.max(w[1] - w[0]);
        }
        TAU - gap
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MleOptions {
    pub cutoff: usize,
    pub max_iter: usize,
    /// Stop when the relative change of the log-likelihood falls below this.
    pub tol: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions { cutoff: DEFAULT_CUTOFF, max_iter: DEFAULT_MAX_ITER, tol: DEFAULT_TOL }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MleResult {
    pub rho: DensityMatrix,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Accepted iterations never lowered the likelihood.
    pub monotone: bool,
    /// Iterations that needed a diluted step.
    pub diluted_steps: usize,
    /// Data points whose probability underflowed at the final state.
    pub clamped: usize,
}

/// Precomputed `u_j` vectors, one row of `cutoff` entries per datum.
struct Kernels {
    n: usize,
    u: Vec<Complex64>,
}

impl Kernels {
    fn new(data: &QuadratureDataset, n: usize) -> Self {
        let mut u = Vec::with_capacity(data.len() * n);
        for &(theta, x) in &data.pairs {
            u.extend(quadrature_vector(theta, x, n));
        }
        Kernels { n, u }
    }

    fn len(&self) -> usize {
        self.u.len() / self.n
    }
}

/// `p = u† ρ u` for one datum.
fn probability(rho: &DMatrix<Complex64>, u: &[Complex64]) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = Complex64::new(0.0, 0.0);
        for j in 0..n {
            row += rho[(i, j)] * u[j];
        }
        acc += (u[i].conj() * row).re;
    }
    acc
}

struct Partial {
    ll: f64,
    r: DMatrix<Complex64>,
    clamped: usize,
}

/// Log-likelihood and, if requested, `R = (1/J) Σ u u† / p`.
fn evaluate(k: &Kernels, rho: &DMatrix<Complex64>, with_r: bool) -> Partial {
    let n = k.n;
    let parts: Vec<Partial> = k
        .u
        .par_chunks(CHUNK * n)
        .map(|chunk| {
            let mut p = Partial { ll: 0.0, r: DMatrix::zeros(if with_r { n } else { 0 }, if with_r { n } else { 0 }), clamped: 0 };
            for u in chunk.chunks_exact(n) {
                let mut prob = probability(rho, u);
                if !(prob > P_FLOOR) {
                    prob = P_FLOOR;
                    p.clamped += 1;
                }
                p.ll += prob.ln();
                if with_r {
                    let w = 1.0 / prob;
                    for i in 0..n {
                        let ui = u[i] * w;
                        for (j, uj) in u.iter().enumerate().skip(i) {
                            p.r[(i, j)] += ui * uj.conj();
                        }
                    }
                }
            }
            p
        })
        .collect();
    let mut total = Partial { ll: 0.0, r: DMatrix::zeros(if with_r { n } else { 0 }, if with_r { n } else { 0 }), clamped: 0 };
    for p in parts {
        total.ll += p.ll;
        total.clamped += p.clamped;
        if with_r {
            total.r += p.r;
        }
    }
    if with_r {
        let inv_j = Complex64::new(1.0 / k.len() as f64, 0.0);
        for i in 0..n {
            for j in 0..i {
                total.r[(i, j)] = total.r[(j, i)].conj();
            }
        }
        total.r *= inv_j;
    }
    total
}

fn step(rho: &DMatrix<Complex64>, r: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let m = r * rho * r;
    DensityMatrix::from_hermitian_unchecked(m).elems().clone()
}

/// Log-likelihood `Σ_j ln Tr(ρ Π_j)` of a dataset.
pub fn log_likelihood(data: &QuadratureDataset, rho: &DensityMatrix) -> f64 {
    evaluate(&Kernels::new(data, rho.cutoff()), rho.elems(), false).ll
}

/// Maximum-likelihood reconstruction by the `ρ ← N[RρR]` iteration from the
/// maximally mixed state.
pub fn mle_reconstruct(data: &QuadratureDataset, opts: &MleOptions) -> Result<MleResult> {
    mle_reconstruct_from(data, opts, None)
}

/// [`mle_reconstruct`] starting from `start` instead of the maximally mixed state.
///
/// When a plain step lowers the likelihood, the step is retried with the
/// diluted operator `(1−ε)I + εR`, halving `ε` until the likelihood does not
/// decrease.
pub fn mle_reconstruct_from(data: &QuadratureDataset, opts: &MleOptions, start: Option<&DensityMatrix>) -> Result<MleResult> {
    if data.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if opts.cutoff == 0 || opts.max_iter == 0 || !(opts.tol > 0.0) {
        return Err(Error::InvalidParams("cutoff and max_iter must be positive, tol > 0".into()));
    }
    if data.theta_span() < std::f64::consts::PI {
        warn!("event=mle_theta_span span={:.3} points={}", data.theta_span(), data.len());
    }
    let n = opts.cutoff;
    let kernels = Kernels::new(data, n);
    let mut rho = match start {
        Some(s) if s.cutoff() == n => s.elems().clone(),
        Some(s) => return Err(Error::DimensionMismatch(s.cutoff(), n)),
        None => DensityMatrix::maximally_mixed(n)?.elems().clone(),
    };
    let identity = DMatrix::<Complex64>::identity(n, n);
    let mut cur = evaluate(&kernels, &rho, true);
    let mut iterations = 0;
    let mut converged = false;
    let mut monotone = true;
    let mut diluted_steps = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut candidate = step(&rho, &cur.r);
        let mut next = evaluate(&kernels, &candidate, true);
        if next.ll < cur.ll {
            diluted_steps += 1;
            let mut eps = 0.5;
            loop {
                let r_eps = &identity * Complex64::new(1.0 - eps, 0.0) + &cur.r * Complex64::new(eps, 0.0);
                candidate = step(&rho, &r_eps);
                next = evaluate(&kernels, &candidate, true);
                if next.ll >= cur.ll || eps < MIN_DILUTION {
                    break;
                }
                eps *= 0.5;
            }
            if next.ll < cur.ll {
                // No ascent direction left at this precision.
                converged = true;
                break;
            }
        }
        debug_assert!(next.ll >= cur.ll, "log-likelihood decreased: {} -> {}", cur.ll, next.ll);
        monotone &= next.ll >= cur.ll;
        let change = (next.ll - cur.ll).abs() / cur.ll.abs().max(1e-300);
        rho = candidate;
        cur = next;
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    if cur.clamped > 0 {
        warn!("event=mle_underflow clamped={} points={}", cur.clamped, data.len());
    }
    let rho = DensityMatrix::from_hermitian_unchecked(rho);
    Ok(MleResult { rho, log_likelihood: cur.ll, iterations, converged, monotone, diluted_steps, clamped: cur.clamped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dataset_rejected() {
        assert!(mle_reconstruct(&QuadratureDataset::default(), &MleOptions::default()).is_err());
    }

    #[test]
    fn theta_span_wraps() {
        let d = QuadratureDataset::new(vec![(0.1, 0.0), (6.2, 0.0)]);
        assert!(d.theta_span() < 0.2);
        let full = QuadratureDataset::new((0..100).map(|i| (i as f64 * 0.0628, 0.0)).collect());
        assert!(full.theta_span() > 6.0);
    }

    #[test]
    fn probability_matches_trace_of_povm() {
        let rho = DensityMatrix::maximally_mixed(4).unwrap();
        let u = quadrature_vector(0.4, 0.9, 4);
        let povm = super::super::fock::povm_element(0.4, 0.9, 4);
        let tr = (rho.elems() * povm).trace();
        assert!((probability(rho.elems(), &u) - tr.re).abs() < 1e-15);
    }
}
