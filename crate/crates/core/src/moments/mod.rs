//! Conditional moments of the cumulative log-return under Q.
//!
//! With `t = 0` the current date, `h_1` is known and `R_T = Σ_{i=1}^T R_i`.
//! Every expectation reduces to products of `h_i^{a_i} z_i^{r_i}`; these are
//! evaluated by backward composition of the log-variance recursion
//! `log h_{t+1} = ζ's_t + ρ log h_t + v_t` (see [`MomentEngine::monomial`]).

mod blocks;
mod bruteforce;
pub mod mc;
mod shock;
mod sterms;

pub use blocks::BuildingBlock;
pub use shock::{gaussian_raw_moment, zr_mgf_raw};
pub use sterms::{PatternTerm, STermId, STerms, MAXN, S_TERM_PATTERNS};

use crate::error::{Error, Result};
use crate::risk_neutral::{g_raw, QParams};
use serde::{Deserialize, Serialize};

/// Largest horizon accepted by the exact moment engine.
pub const MAX_HORIZON: usize = 400;
/// Largest horizon accepted by the brute-force oracle.
pub const MAX_BRUTEFORCE_HORIZON: usize = 10;

/// Inputs for one conditional moment evaluation. `s0` is zero-based.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentContext {
    pub qparams: QParams,
    pub log_h1: f64,
    pub s0: usize,
    pub horizon: usize,
}

/// Mean, standard deviation, skewness and kurtosis of `R_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cumulants {
    pub mu: f64,
    pub sigma: f64,
    pub kappa3: f64,
    pub kappa4: f64,
}

/// Precomputed reduced-form coefficients of the Q dynamics.
#[derive(Debug, Clone)]
pub struct MomentEngine {
    n: usize,
    rho: f64,
    zeta: Vec<f64>,
    c1: f64,
    c2: f64,
    gs: f64,
    r: f64,
    trans: Vec<f64>,
}

impl MomentEngine {
    pub fn new(q: &QParams) -> Self {
        let n = q.n_states();
        let mut trans = Vec::with_capacity(n * n);
        for i in 0..n {
            trans.extend_from_slice(q.trans.row(i));
        }
        Self {
            n,
            rho: q.rho(),
            zeta: q.zeta(),
            c1: q.c1(),
            c2: q.c2(),
            gs: q.gamma_sigma(),
            r: q.r,
            trans,
        }
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    #[inline]
    pub fn g(&self, x: f64) -> Result<f64> {
        g_raw(x, self.c1, self.c2, self.gs)
    }

    /// `E[z^r exp(k v)]`.
    #[inline]
    pub fn zr_mgf(&self, r: u32, k: f64) -> Result<f64> {
        zr_mgf_raw(r, k, self.c1, self.c2, self.gs)
    }

    /// `Δ(φ)` with the engine's transition matrix.
    pub(crate) fn delta(&self, phi: &[f64]) -> Vec<f64> {
        let m = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (0..self.n)
            .map(|i| {
                let row = &self.trans[i * self.n..(i + 1) * self.n];
                m + row.iter().zip(phi).map(|(p, f)| p * (f - m).exp()).sum::<f64>().ln()
            })
            .collect()
    }

    /// `E[Π_t h_t^{a_t} z_t^{r_t} | h_1, s_0]` for every `s_0`, by one backward
    /// pass over `t = T..1`. Factors are `(t, a, r)` with `t ≥ 1`; repeated
    /// times multiply.
    ///
    /// Carrying `(M, φ, C)` with `E[future | h_t, s_{t−1}] = C h_t^M e^{φ_{s_{t−1}}}`:
    /// `M ← a_t + ρM`, `φ ← Δ(φ + Mζ)`, `C ← C·E[z^{r_t} e^{Mv}]`.
    pub fn monomial(&self, log_h1: f64, factors: &[(usize, f64, u32)]) -> Result<Vec<f64>> {
        let t_max = factors.iter().map(|f| f.0).max().unwrap_or(1);
        if factors.iter().any(|f| f.0 == 0) {
            return Err(Error::InvalidParams("monomial times start at 1".into()));
        }
        let mut a = vec![0.0; t_max + 1];
        let mut r = vec![0u32; t_max + 1];
        for &(t, at, rt) in factors {
            a[t] += at;
            r[t] += rt;
        }
        let mut m = 0.0;
        let mut phi = vec![0.0; self.n];
        let mut c = 1.0;
        for t in (1..=t_max).rev() {
            c *= self.zr_mgf(r[t], m)?;
            let shifted: Vec<f64> = phi.iter().zip(&self.zeta).map(|(p, z)| p + m * z).collect();
            phi = self.delta(&shifted);
            m = a[t] + self.rho * m;
        }
        Ok(phi.iter().map(|p| c * (m * log_h1 + p).exp()).collect())
    }

    /// Raw moments `E R_T^k`, `k = 1..4`, for every initial state.
    pub fn raw_moments(&self, log_h1: f64, horizon: usize) -> Result<Vec<[f64; 4]>> {
        let s = self.s_terms(log_h1, horizon)?;
        Ok(s.raw_moments(self.r, horizon))
    }

    /// Brute-force moments by ordered-tuple expansion (see `bruteforce`).
    pub fn bruteforce_moments(&self, log_h1: f64, horizon: usize) -> Result<Vec<[f64; 4]>> {
        bruteforce::moments(self, log_h1, horizon)
    }

    /// Cumulants for every initial state.
    pub fn cumulants(&self, log_h1: f64, horizon: usize) -> Result<Vec<Cumulants>> {
        self.raw_moments(log_h1, horizon)?.into_iter().map(cumulants_from_raw).collect()
    }
}

/// Cumulants from raw moments: `σ² = E R² − μ²`,
/// `κ3 = (E R³ − μ³)/σ³ − 3μ/σ`,
/// `κ4 = (E R⁴ − μ⁴)/σ⁴ − 2(μ/σ)(2κ3 + 3μ/σ)`, evaluated through central
/// moments to limit cancellation.
pub fn cumulants_from_raw(raw: [f64; 4]) -> Result<Cumulants> {
    let [m1, m2, m3, m4] = raw;
    let var = m2 - m1 * m1;
    if !(var > 0.0) || !var.is_finite() {
        return Err(Error::NonPositiveVariance(var));
    }
    let sigma = var.sqrt();
    let c3 = m3 - 3.0 * m1 * m2 + 2.0 * m1.powi(3);
    let c4 = m4 - 4.0 * m1 * m3 + 6.0 * m1 * m1 * m2 - 3.0 * m1.powi(4);
    Ok(Cumulants { mu: m1, sigma, kappa3: c3 / var.powf(1.5), kappa4: c4 / (var * var) })
}

fn check_ctx(ctx: &MomentContext) -> Result<()> {
    if ctx.horizon == 0 {
        return Err(Error::Empty("moment horizon"));
    }
    if ctx.s0 >= ctx.qparams.n_states() {
        return Err(Error::StateIndex { index: ctx.s0, n: ctx.qparams.n_states() });
    }
    if !ctx.log_h1.is_finite() {
        return Err(Error::NonFinite("log_h1"));
    }
    Ok(())
}

/// `(E R_T, E R_T², E R_T³, E R_T⁴)` given `h_1` and `s_0`.
pub fn raw_moments(ctx: &MomentContext) -> Result<[f64; 4]> {
    check_ctx(ctx)?;
    let e = MomentEngine::new(&ctx.qparams);
    Ok(e.raw_moments(ctx.log_h1, ctx.horizon)?[ctx.s0])
}

/// Oracle: the same moments from the full ordered-tuple expansion.
pub fn bruteforce_moments(ctx: &MomentContext) -> Result<[f64; 4]> {
    check_ctx(ctx)?;
    let e = MomentEngine::new(&ctx.qparams);
    Ok(e.bruteforce_moments(ctx.log_h1, ctx.horizon)?[ctx.s0])
}

pub fn cumulants(ctx: &MomentContext) -> Result<Cumulants> {
    cumulants_from_raw(raw_moments(ctx)?)
}
