//! Numerical sandwich (QML-robust) standard errors.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

/// Relative finite-difference step.
pub const REL_STEP: f64 = 1e-5;

/// Eigenvalues of the unit-diagonal Hessian below this fraction of the
/// largest are treated as zero. Finite-difference noise sits well above
/// machine precision, hence the loose cut.
const SINGULAR_RATIO: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichResult {
    pub se: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    /// The Hessian was (numerically) singular and a pseudo-inverse was used.
    pub pseudo_inverse: bool,
    /// Smallest over largest absolute eigenvalue of the rescaled Hessian.
    pub condition: f64,
}

/// Steps `1e-5 · max(|θ_i|, 1)`.
pub fn default_steps(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| REL_STEP * t.abs().max(1.0)).collect()
}

fn shifted(theta: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut x = theta.to_vec();
    for &(i, d) in moves {
        x[i] += d;
    }
    x
}

/// `H⁻¹ S H⁻¹`, with `H` the central-difference Hessian of the summed
/// contributions and `S` the outer product of per-observation scores.
/// `contributions(θ)` returns one log-likelihood term per observation.
pub fn robust_se<F>(theta: &[f64], steps: &[f64], contributions: F) -> Result<SandwichResult>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let k = theta.len();
    if steps.len() != k {
        return Err(Error::Dimension { expected: k, got: steps.len() });
    }
    let total = |x: &[f64]| -> Result<f64> { Ok(contributions(x)?.iter().sum()) };
    let f0 = total(theta)?;
    let n_obs = contributions(theta)?.len();

    let mut scores = DMatrix::<f64>::zeros(n_obs, k);
    let mut f_plus = vec![0.0; k];
    let mut f_minus = vec![0.0; k];
    for i in 0..k {
        let up = contributions(&shifted(theta, &[(i, steps[i])]))?;
        let dn = contributions(&shifted(theta, &[(i, -steps[i])]))?;
        if up.len() != n_obs || dn.len() != n_obs {
            return Err(Error::Dimension { expected: n_obs, got: up.len().min(dn.len()) });
        }
        for t in 0..n_obs {
            scores[(t, i)] = (up[t] - dn[t]) / (2.0 * steps[i]);
        }
        f_plus[i] = up.iter().sum();
        f_minus[i] = dn.iter().sum();
    }
    let mut h = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        h[(i, i)] = (f_plus[i] - 2.0 * f0 + f_minus[i]) / (steps[i] * steps[i]);
        for j in 0..i {
            let (si, sj) = (steps[i], steps[j]);
            let pp = total(&shifted(theta, &[(i, si), (j, sj)]))?;
            let pm = total(&shifted(theta, &[(i, si), (j, -sj)]))?;
            let mp = total(&shifted(theta, &[(i, -si), (j, sj)]))?;
            let mm = total(&shifted(theta, &[(i, -si), (j, -sj)]))?;
            let v = (pp - pm - mp + mm) / (4.0 * si * sj);
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    let s = scores.transpose() * &scores;
    sandwich_from(&h, &s)
}

/// Sandwich covariance from a Hessian and score outer product. The Hessian
/// is rescaled to unit diagonal before inversion so that singularity is
/// judged independently of parameter units.
pub fn sandwich_from(h: &DMatrix<f64>, s: &DMatrix<f64>) -> Result<SandwichResult> {
    if h.iter().chain(s.iter()).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Hessian or score"));
    }
    let k = h.nrows();
    let d: Vec<f64> = (0..k)
        .map(|i| {
            let a = h[(i, i)].abs();
            if a > 0.0 { 1.0 / a.sqrt() } else { 1.0 }
        })
        .collect();
    let scaled = DMatrix::from_fn(k, k, |i, j| h[(i, j)] * d[i] * d[j]);
    let eig = SymmetricEigen::new(scaled);
    let amax = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let amin = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let condition = if amax > 0.0 { amin / amax } else { 0.0 };
    let cut = SINGULAR_RATIO * amax;
    let pseudo_inverse = amin <= cut;
    let mut inv_diag = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        let e = eig.eigenvalues[i];
        if e.abs() > cut {
            inv_diag[(i, i)] = 1.0 / e;
        }
    }
    let sinv = &eig.eigenvectors * inv_diag * eig.eigenvectors.transpose();
    let hinv = DMatrix::from_fn(k, k, |i, j| sinv[(i, j)] * d[i] * d[j]);
    let cov = &hinv * s * &hinv;
    let se = (0..k).map(|i| cov[(i, i)].max(0.0).sqrt()).collect();
    let cov = (0..k).map(|i| (0..k).map(|j| cov[(i, j)]).collect()).collect();
    Ok(SandwichResult { se, cov, pseudo_inverse, condition })
}
