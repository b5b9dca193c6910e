//! Closed forms for the variance-innovation shocks.

use crate::error::{Error, Result};

/// `E[z^r exp(k v)]` for `v = c1 z + c2 (z²−1) + gs u`, `z, u` i.i.d. N(0,1).
///
/// Completing the square gives `s exp(a²s²/2) μ_r` with `a = k c1`,
/// `s² = 1/(1−2k c2)` and `μ_r` the r-th raw moment of N(a s², s²), times the
/// `u` factor `exp(k²gs²/2 − k c2)`.
pub fn zr_mgf_raw(r: u32, k: f64, c1: f64, c2: f64, gs: f64) -> Result<f64> {
    let d = 1.0 - 2.0 * k * c2;
    if !(d > 0.0) {
        return Err(Error::MgfDomain(k * c2));
    }
    Ok(zr_mgf_unchecked(r, k, c1, c2, gs, d))
}

#[inline]
pub(crate) fn zr_mgf_unchecked(r: u32, k: f64, c1: f64, c2: f64, gs: f64, d: f64) -> f64 {
    let s2 = 1.0 / d;
    let a = k * c1;
    let mean = a * s2;
    let base = (0.5 * k * k * gs * gs - k * c2 + 0.5 * a * a * s2).exp() * s2.sqrt();
    base * gaussian_raw_moment(r, mean, s2)
}

/// Raw moment `E[X^r]` of N(mean, var) via `μ_r = mean μ_{r−1} + (r−1) var μ_{r−2}`.
pub fn gaussian_raw_moment(r: u32, mean: f64, var: f64) -> f64 {
    let mut prev = 1.0; // μ_0
    if r == 0 {
        return prev;
    }
    let mut cur = mean; // μ_1
    for k in 2..=r {
        let next = mean * cur + (k - 1) as f64 * var * prev;
        prev = cur;
        cur = next;
    }
    cur
}
