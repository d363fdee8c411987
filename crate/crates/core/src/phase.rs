//! Phase arithmetic shared by every stage.
//!
//! All reported phases live in the half-open interval (−π, π].

use std::f64::consts::{PI, TAU};

/// Wraps an angle into (−π, π].
///
/// ```
/// use dlphase::phase::wrap;
/// use std::f64::consts::PI;
/// assert_eq!(wrap(PI), PI);
/// assert_eq!(wrap(-PI), PI);
/// assert!((wrap(1.5 * PI) + 0.5 * PI).abs() < 1e-15);
/// ```
pub fn wrap(x: f64) -> f64 {
    if x > -PI && x <= PI {
        return x;
    }
    let mut r = x.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    // rem_euclid can land exactly on -π after the subtraction above.
    if r <= -PI {
        r += TAU;
    }
    r
}

/// Mean direction of a set of angles, `None` when the resultant vanishes.
pub fn circular_mean<I: IntoIterator<Item = f64>>(angles: I) -> Option<f64> {
    let (mut s, mut c, mut n) = (0.0, 0.0, 0usize);
    for a in angles {
        s += a.sin();
        c += a.cos();
        n += 1;
    }
    if n == 0 || (s * s + c * c).sqrt() < 1e-12 * n as f64 {
        return None;
    }
    Some(wrap(s.atan2(c)))
}

/// `atan2`-style argument of `(re, im)` folded into (−π, π].
pub(crate) fn arg(re: f64, im: f64) -> f64 {
    wrap(im.atan2(re))
}
