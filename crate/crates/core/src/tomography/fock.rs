use nalgebra::DMatrix;
use num_complex::Complex64;

/// `(2π)^{-1/4}`.
const PSI0_NORM: f64 = 0.631_618_777_746_064_7;

/// Quadrature wavefunctions `ψ_0(x) … ψ_{n-1}(x)` for vacuum variance 1.
///
/// Uses `ψ_{k+1} = (x ψ_k − √k ψ_{k−1}) / √(k+1)`, stable for large `k`.
pub fn fock_wavefunctions(x: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return out;
    }
    out.push(PSI0_NORM * (-0.25 * x * x).exp());
    if n > 1 {
        out.push(x * out[0]);
    }
    for k in 1..n.saturating_sub(1) {
        let next = (x * out[k] - (k as f64).sqrt() * out[k - 1]) / ((k + 1) as f64).sqrt();
        out.push(next);
    }
    out
}

/// `ψ_n(x) = (2π)^{-1/4} (2ⁿ n!)^{-1/2} H_n(x/√2) e^{−x²/4}`.
///
/// ```
/// use dlphase::tomography::fock_wavefunction;
/// assert!((fock_wavefunction(0, 0.0) - 0.63162).abs() < 1e-5);
/// assert_eq!(fock_wavefunction(1, 0.0), 0.0);
/// ```
pub fn fock_wavefunction(n: usize, x: f64) -> f64 {
    fock_wavefunctions(x, n + 1)[n]
}

/// Rotated quadrature eigenvector `u_m = ψ_m(x) e^{imθ}`, so that the
/// measurement operator is `Π = u u†`.
pub fn quadrature_vector(theta: f64, x: f64, cutoff: usize) -> Vec<Complex64> {
    fock_wavefunctions(x, cutoff)
        .into_iter()
        .enumerate()
        .map(|(m, p)| Complex64::from_polar(p, m as f64 * theta))
        .collect()
}

/// `Π(θ, x)_{mn} = ψ_m(x) ψ_n(x) e^{i(m−n)θ}` for `X_θ = a e^{−iθ} + a† e^{iθ}`.
pub fn povm_element(theta: f64, x: f64, cutoff: usize) -> DMatrix<Complex64> {
    let u = quadrature_vector(theta, x, cutoff);
    DMatrix::from_fn(cutoff, cutoff, |m, n| u[m] * u[n].conj())
}
