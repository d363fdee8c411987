use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use super::density::DensityMatrix;
use crate::error::{Error, Result};

/// Largest photon-number weight [`coherent_dm`] may drop at the cutoff.
pub const MAX_TRUNCATION_LOSS: f64 = 1e-6;
const PHASE_GRID: usize = 64;

fn sqrt_psd(m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let eig = SymmetricEigen::new(m.clone());
    let top = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    // Rounding leaves eigenvalues of order 1e-17 on the null space, whose
    // square roots would otherwise leak into the result at the 1e-9 level.
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| {
        let l = if l < 1e-14 * top { 0.0 } else { l };
        Complex64::new(l.sqrt(), 0.0)
    }));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

/// `(Tr √(√ρ_a ρ_b √ρ_a))²`, evaluated as the squared trace norm of `√ρ_a √ρ_b`.
///
/// ```
/// use dlphase::tomography::{fidelity, DensityMatrix};
/// let a = DensityMatrix::fock(0, 4).unwrap();
/// let b = DensityMatrix::fock(1, 4).unwrap();
/// assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-12);
/// assert!(fidelity(&a, &b).unwrap() < 1e-12);
/// ```
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    if a.cutoff() != b.cutoff() {
        return Err(Error::DimensionMismatch(a.cutoff(), b.cutoff()));
    }
    for rho in [a, b] {
        let min = super::density::min_eigenvalue(rho.elems());
        if min < -1e-10 {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
    }
    let m = sqrt_psd(a.elems()) * sqrt_psd(b.elems());
    let s: f64 = m.singular_values().iter().sum();
    Ok((s * s).clamp(0.0, 1.0))
}

/// `⟨ψ|ρ|ψ⟩`, the fidelity with a pure state.
pub fn pure_fidelity(rho: &DensityMatrix, psi: &DVector<Complex64>) -> f64 {
    let v = rho.elems() * psi;
    psi.dotc(&v).re.clamp(0.0, 1.0)
}

/// `Tr ρ²`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.elems().iter().map(|z| z.norm_sqr()).sum()
}

/// `Σ n ρ_nn`.
pub fn mean_photon(rho: &DensityMatrix) -> f64 {
    rho.populations().iter().enumerate().map(|(n, p)| n as f64 * p).sum()
}

/// `Tr(ρ a) = Σ √n ρ_{n,n−1}`.
pub fn mean_field(rho: &DensityMatrix) -> Complex64 {
    (1..rho.cutoff()).map(|n| rho.get(n, n - 1) * (n as f64).sqrt()).sum()
}

/// Truncated coherent vector and the weight lost above the cutoff.
pub fn coherent_vector(alpha: Complex64, cutoff: usize) -> (DVector<Complex64>, f64) {
    let mut v = DVector::zeros(cutoff);
    let mut c = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..cutoff {
        v[n] = c;
        c *= alpha / ((n + 1) as f64).sqrt();
    }
    let kept: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    (v, (1.0 - kept).max(0.0))
}

/// `|α⟩⟨α|` truncated to `cutoff` levels and renormalized.
pub fn coherent_dm(alpha: Complex64, cutoff: usize) -> Result<DensityMatrix> {
    if cutoff == 0 {
        return Err(Error::InvalidParams("cutoff must be at least 1".into()));
    }
    let (v, lost) = coherent_vector(alpha, cutoff);
    if lost > MAX_TRUNCATION_LOSS {
        return Err(Error::CutoffTooSmall { alpha: alpha.norm(), cutoff, lost });
    }
    DensityMatrix::pure(&v)
}

/// Fidelity with the coherent state of equal mean photon number.
///
/// The phase of the reference is that of `Tr(ρa)`, or the best of a 64-point
/// grid when the mean field vanishes. The reference is truncated at the
/// cutoff of `rho` and renormalized.
pub fn coherent_overlap(rho: &DensityMatrix) -> f64 {
    let r = mean_photon(rho).max(0.0).sqrt();
    let field = mean_field(rho);
    let at = |phi: f64| {
        let (mut v, _) = coherent_vector(Complex64::from_polar(r, phi), rho.cutoff());
        let norm = v.norm();
        v /= Complex64::new(norm, 0.0);
        pure_fidelity(rho, &v)
    };
    if field.norm() > 1e-9 {
        at(field.arg())
    } else {
        (0..PHASE_GRID).map(|k| at(TAU * k as f64 / PHASE_GRID as f64)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coherent_overlap_examples() {
        let rho = coherent_dm(Complex64::new(0.5, 0.0), 12).unwrap();
        assert!((coherent_overlap(&rho) - 1.0).abs() < 1e-6);
        let one = DensityMatrix::fock(1, 12).unwrap();
        assert!((coherent_overlap(&one) - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn coherent_populations_are_poisson() {
        let rho = coherent_dm(Complex64::new(0.71, 0.0), 15).unwrap();
        assert!((rho.get(0, 0).re - (-0.5041f64).exp()).abs() < 1e-9);
        assert!((mean_photon(&rho) - 0.5041).abs() < 1e-8);
        let a = mean_field(&coherent_dm(Complex64::from_polar(0.9, 1.2), 15).unwrap());
        assert!((a - Complex64::from_polar(0.9, 1.2)).norm() < 1e-6);
        assert_eq!(coherent_dm(Complex64::new(0.0, 0.0), 5).unwrap(), DensityMatrix::vacuum(5).unwrap());
    }

    #[test]
    fn truncation_error() {
        assert!(matches!(coherent_dm(Complex64::new(3.0, 0.0), 10), Err(Error::CutoffTooSmall { .. })));
    }

    #[test]
    fn purity_extremes() {
        assert!((purity(&DensityMatrix::fock(2, 6).unwrap()) - 1.0).abs() < 1e-15);
        assert!((purity(&DensityMatrix::maximally_mixed(6).unwrap()) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_cutoff_mismatch() {
        let a = DensityMatrix::vacuum(3).unwrap();
        let b = DensityMatrix::vacuum(4).unwrap();
        assert!(matches!(fidelity(&a, &b), Err(Error::DimensionMismatch(3, 4))));
    }
}
