use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::density::DensityMatrix;

/// Uniform axis from `-extent` to `extent` with the given spacing.
pub fn axis(extent: f64, spacing: f64) -> Vec<f64> {
    let n = (2.0 * extent / spacing).round() as usize;
    (0..=n).map(|i| -extent + i as f64 * spacing).collect()
}

/// Default axis, ±10 in steps of 0.1.
pub fn default_axis() -> Vec<f64> {
    axis(10.0, 0.1)
}

/// `W(x, p)` on a rectangular grid; `values[i * p_axis.len() + j]` is `W(x_i, p_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: Vec<f64>,
}

impl WignerGrid {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p_axis.len() + j]
    }

    /// Riemann sum `Σ W Δx Δp`.
    pub fn integral(&self) -> f64 {
        let dx = spacing(&self.x_axis);
        let dp = spacing(&self.p_axis);
        self.values.iter().sum::<f64>() * dx * dp
    }

    /// `∫ W dp` at each `x`.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = spacing(&self.p_axis);
        self.values.chunks_exact(self.p_axis.len()).map(|row| row.iter().sum::<f64>() * dp).collect()
    }

    /// Location of the maximum, refined by a parabola through the
    /// neighbouring grid points along each axis.
    pub fn max_location(&self) -> (f64, f64) {
        let (nx, np) = (self.x_axis.len(), self.p_axis.len());
        let (mut bi, mut bj, mut best) = (0, 0, f64::NEG_INFINITY);
        for i in 0..nx {
            for j in 0..np {
                if self.at(i, j) > best {
                    best = self.at(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        let refine = |lo: f64, mid: f64, hi: f64| {
            let denom = lo - 2.0 * mid + hi;
            if denom < 0.0 {
                (0.5 * (lo - hi) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        };
        let mut x = self.x_axis[bi];
        if bi > 0 && bi + 1 < nx {
            x += refine(self.at(bi - 1, bj), best, self.at(bi + 1, bj)) * spacing(&self.x_axis);
        }
        let mut p = self.p_axis[bj];
        if bj > 0 && bj + 1 < np {
            p += refine(self.at(bi, bj - 1), best, self.at(bi, bj + 1)) * spacing(&self.p_axis);
        }
        (x, p)
    }
}

fn spacing(axis: &[f64]) -> f64 {
    if axis.len() < 2 {
        1.0
    } else {
        (axis[axis.len() - 1] - axis[0]) / (axis.len() - 1) as f64
    }
}

/// Wigner function at one phase-space point, `α = (x + ip)/2`.
///
/// Uses the Laguerre form of the kernel of `|m⟩⟨n|`, `m ≥ n`:
/// `(2/π)(−1)ⁿ √(n!/m!) (2α*)^{m−n} e^{−2|α|²} L_n^{(m−n)}(4|α|²)`,
/// divided by 4 for the `dx dp` measure.
pub fn wigner_point(rho: &DensityMatrix, x: f64, p: f64) -> f64 {
    let n = rho.cutoff();
    let alpha = Complex64::new(0.5 * x, 0.5 * p);
    let y = 4.0 * alpha.norm_sqr();
    let gauss = (-0.5 * y).exp();
    let two_conj = 2.0 * alpha.conj();
    let mut total = 0.0;
    // pow = (2α*)^k / √(k!) built up along k; the ratio √(n!/m!) is folded
    // into the recurrence for each diagonal below.
    let mut pow = Complex64::new(1.0, 0.0);
    for k in 0..n {
        // Laguerre L_j^{(k)}(y) by recurrence in j, with √(j!/(j+k)!) tracked.
        let (mut l_prev, mut l_cur) = (0.0, 1.0);
        let mut ratio = pow;
        let mut sum = Complex64::new(0.0, 0.0);
        for j in 0..(n - k) {
            if j > 0 {
                let l_next = ((2.0 * (j - 1) as f64 + 1.0 + k as f64 - y) * l_cur - ((j - 1) as f64 + k as f64) * l_prev) / j as f64;
                l_prev = l_cur;
                l_cur = l_next;
                ratio *= (j as f64 / (j + k) as f64).sqrt();
            }
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sum += rho.get(j + k, j) * ratio * (sign * l_cur);
        }
        total += if k == 0 { sum.re } else { 2.0 * sum.re };
        pow *= two_conj / ((k + 1) as f64).sqrt();
    }
    total * gauss * 2.0 / PI / 4.0
}

/// Wigner function of `rho` on the product grid.
pub fn wigner(rho: &DensityMatrix, x_axis: &[f64], p_axis: &[f64]) -> WignerGrid {
    use rayon::prelude::*;
    let values: Vec<f64> = x_axis
        .par_iter()
        .flat_map_iter(|&x| p_axis.iter().map(move |&p| wigner_point(rho, x, p)))
        .collect();
    WignerGrid { x_axis: x_axis.to_vec(), p_axis: p_axis.to_vec(), values }
}
