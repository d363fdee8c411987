//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::f64::consts::{PI, TAU};

use dlphase::atomic::AtomicParams;
use dlphase::tomography::{quadrature_vector, DensityMatrix, QuadratureDataset};
use nalgebra::Matrix3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type M3 = Matrix3<Complex64>;

/// Steady-state `⟨3|ρ|1⟩` of a three-level Λ system integrated in time.
///
/// Levels 1 and 2 are ground states, 3 is excited. The weak field couples
/// 1↔3 and the strong field 2↔3, both with Rabi frequency Ω entering the
/// Hamiltonian as Ω/2. Both fields share the one-photon detuning `delta`
/// (two-photon resonance). Level 3 decays to 1 at rate `big_gamma`; the
/// ground coherence dephases at rate `gamma`.
pub fn bloch_rho31(gamma: f64, big_gamma: f64, delta: f64, weak: Complex64, strong: Complex64) -> Complex64 {
    let z = Complex64::new(0.0, 0.0);
    let mut h = M3::zeros();
    h[(2, 2)] = Complex64::new(delta, 0.0);
    h[(2, 0)] = -0.5 * weak;
    h[(0, 2)] = -0.5 * weak.conj();
    h[(2, 1)] = -0.5 * strong;
    h[(1, 2)] = -0.5 * strong.conj();
    let i = Complex64::new(0.0, 1.0);
    let deriv = |rho: &M3| -> M3 {
        let mut d = -(h * rho - rho * h) * i;
        // Spontaneous decay 3 → 1.
        d[(0, 0)] += big_gamma * rho[(2, 2)];
        d[(2, 2)] -= big_gamma * rho[(2, 2)];
        for k in 0..2 {
            d[(2, k)] -= 0.5 * big_gamma * rho[(2, k)];
            d[(k, 2)] -= 0.5 * big_gamma * rho[(k, 2)];
        }
        // Ground-state dephasing.
        d[(0, 1)] -= gamma * rho[(0, 1)];
        d[(1, 0)] -= gamma * rho[(1, 0)];
        d
    };
    let mut rho = M3::zeros();
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    let rate = big_gamma.max(delta.abs()).max(strong.norm()).max(1.0);
    let dt = 0.05 / rate;
    let chunk = (1.0 / gamma / dt).ceil() as usize;
    let mut last = z;
    for _ in 0..400 {
        for _ in 0..chunk {
            let k1 = deriv(&rho);
            let k2 = deriv(&(rho + k1 * Complex64::new(0.5 * dt, 0.0)));
            let k3 = deriv(&(rho + k2 * Complex64::new(0.5 * dt, 0.0)));
            let k4 = deriv(&(rho + k3 * Complex64::new(dt, 0.0)));
            let two = Complex64::new(2.0, 0.0);
            rho += (k1 + k2 * two + k3 * two + k4) * Complex64::new(dt / 6.0, 0.0);
        }
        let cur = rho[(2, 0)];
        if (cur - last).norm() < 1e-12 * cur.norm() {
            return cur;
        }
        last = cur;
    }
    last
}

/// Homodyne samples of the coherent state `|α⟩`: θ uniform on [0, 2π),
/// `x ~ N(2|α|cos(θ − arg α), 1)`.
pub fn sample_coherent(alpha: Complex64, n: usize, seed: u64) -> QuadratureDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = (0..n)
        .map(|_| {
            let theta: f64 = rng.random_range(0.0..TAU);
            let z: f64 = rng.sample(StandardNormal);
            (theta, 2.0 * alpha.norm() * (theta - alpha.arg()).cos() + z)
        })
        .collect();
    QuadratureDataset::new(pairs)
}

/// Probability density of `x` at phase θ for a general state.
pub fn quadrature_density(rho: &DensityMatrix, theta: f64, x: f64) -> f64 {
    let u = quadrature_vector(theta, x, rho.cutoff());
    let mut acc = 0.0;
    for m in 0..u.len() {
        for n in 0..u.len() {
            acc += (u[m].conj() * rho.get(m, n) * u[n]).re;
        }
    }
    acc
}

/// Homodyne samples of a general state by rejection sampling on [−12, 12].
pub fn sample_state(rho: &DensityMatrix, n: usize, seed: u64) -> QuadratureDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bound = 0.0f64;
    for k in 0..64 {
        let theta = TAU * k as f64 / 64.0;
        for i in 0..=480 {
            bound = bound.max(quadrature_density(rho, theta, -12.0 + i as f64 * 0.05));
        }
    }
    bound *= 1.2;
    let mut pairs = Vec::with_capacity(n);
    while pairs.len() < n {
        let theta: f64 = rng.random_range(0.0..TAU);
        let x: f64 = rng.random_range(-12.0..12.0);
        if rng.random::<f64>() * bound < quadrature_density(rho, theta, x) {
            pairs.push((theta, x));
        }
    }
    QuadratureDataset::new(pairs)
}

/// Random valid density matrix of rank ≤ `rank`, mostly in low Fock levels.
pub fn random_state(cutoff: usize, rank: usize, seed: u64) -> DensityMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(cutoff, cutoff);
    for _ in 0..rank {
        let v = nalgebra::DVector::from_fn(cutoff, |n, _| {
            let damp = (-(n as f64) / 2.0).exp();
            Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * damp
        });
        m += &v * v.adjoint();
    }
    let tr = m.trace();
    DensityMatrix::new((&m + m.adjoint()) / (tr * 2.0)).unwrap()
}

pub fn rms(errors: &[f64]) -> f64 {
    (errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt()
}

pub fn wrap(x: f64) -> f64 {
    let mut r = x.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Draws a weak-drive parameter set: `γ`, `Δ₂`, weak and strong Rabi frequencies.
pub fn weak_drive_draw(rng: &mut ChaCha8Rng) -> (AtomicParams, Complex64, Complex64) {
    let gamma = rng.random_range(0.05..0.5);
    let delta2: f64 = rng.random_range(-2.0..2.0);
    let params = AtomicParams::new(1.0, gamma, delta2, delta2, 1.0, 1.0, 1.0, 1.0);
    let d = Complex64::new(1.0, 2.0 * delta2).norm();
    let x = rng.random_range(1e-4..4e-3);
    let strong_mag = (x * gamma * d).sqrt();
    let weak_mag = strong_mag * rng.random_range(1e-3..0.01);
    let strong = Complex64::from_polar(strong_mag, rng.random_range(-3.0..3.0));
    let weak = Complex64::from_polar(weak_mag, rng.random_range(-3.0..3.0));
    (params, weak, strong)
}
