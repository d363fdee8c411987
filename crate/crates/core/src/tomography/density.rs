use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-10;

/// Truncated Fock-basis density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    elems: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(elems: DMatrix<Complex64>) -> Result<Self> {
        if elems.nrows() != elems.ncols() {
            return Err(Error::DimensionMismatch(elems.nrows(), elems.ncols()));
        }
        if elems.nrows() == 0 {
            return Err(Error::InvalidState("empty matrix".into()));
        }
        let n = elems.nrows();
        for i in 0..n {
            for j in i..n {
                if (elems[(i, j)] - elems[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::InvalidState(format!("not Hermitian at ({i}, {j})")));
                }
            }
        }
        let tr = elems.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let min = min_eigenvalue(&elems);
        if min < -PSD_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(DensityMatrix { elems })
    }

    /// Hermitian part, normalized to unit trace, without the positivity check.
    pub(crate) fn from_hermitian_unchecked(m: DMatrix<Complex64>) -> Self {
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = h.trace().re;
        DensityMatrix { elems: h / Complex64::new(tr, 0.0) }
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn pure(psi: &DVector<Complex64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = psi / Complex64::new(norm, 0.0);
        Ok(DensityMatrix::from_hermitian_unchecked(&v * v.adjoint()))
    }

    pub fn fock(n: usize, cutoff: usize) -> Result<Self> {
        if n >= cutoff {
            return Err(Error::InvalidParams(format!("Fock level {n} outside cutoff {cutoff}")));
        }
        let mut m = DMatrix::zeros(cutoff, cutoff);
        m[(n, n)] = Complex64::new(1.0, 0.0);
        Ok(DensityMatrix { elems: m })
    }

    pub fn vacuum(cutoff: usize) -> Result<Self> {
        Self::fock(0, cutoff)
    }

    pub fn maximally_mixed(cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidParams("cutoff must be at least 1".into()));
        }
        let m = DMatrix::identity(cutoff, cutoff) / Complex64::new(cutoff as f64, 0.0);
        Ok(DensityMatrix { elems: m })
    }

    pub fn cutoff(&self) -> usize {
        self.elems.nrows()
    }

    pub fn elems(&self) -> &DMatrix<Complex64> {
        &self.elems
    }

    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.elems[(m, n)]
    }

    /// Photon-number distribution `ρ_nn`.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.cutoff()).map(|n| self.elems[(n, n)].re).collect()
    }

    /// `U ρ U†` with `U = diag(e^{inδ})`, the phase-space rotation by `δ`.
    pub fn rotated(&self, delta: f64) -> Self {
        let n = self.cutoff();
        let m = DMatrix::from_fn(n, n, |i, j| self.elems[(i, j)] * Complex64::from_polar(1.0, (i as f64 - j as f64) * delta));
        DensityMatrix { elems: m }
    }

    /// Embeds into a larger cutoff or truncates and renormalizes into a smaller one.
    pub fn resized(&self, cutoff: usize) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::InvalidParams("cutoff must be at least 1".into()));
        }
        let k = cutoff.min(self.cutoff());
        let m = DMatrix::from_fn(cutoff, cutoff, |i, j| if i < k && j < k { self.elems[(i, j)] } else { Complex64::new(0.0, 0.0) });
        if !(m.trace().re > 0.0) {
            return Err(Error::InvalidState("no weight below the new cutoff".into()));
        }
        Ok(DensityMatrix::from_hermitian_unchecked(m))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.elems.clone()).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

pub(crate) fn min_eigenvalue(m: &DMatrix<Complex64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityFile {
    cutoff: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.cutoff();
        let mut re = Vec::with_capacity(n * n);
        let mut im = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                re.push(self.elems[(i, j)].re);
                im.push(self.elems[(i, j)].im);
            }
        }
        DensityFile { cutoff: n, re, im }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = DensityFile::deserialize(d)?;
        let n = f.cutoff;
        if f.re.len() != n * n || f.im.len() != n * n {
            return Err(D::Error::custom(format!("expected {} entries for cutoff {n}", n * n)));
        }
        let m = DMatrix::from_fn(n, n, |i, j| Complex64::new(f.re[i * n + j], f.im[i * n + j]));
        DensityMatrix::new(m).map_err(D::Error::custom)
    }
}
