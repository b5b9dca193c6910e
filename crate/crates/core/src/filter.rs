//! Forward filter for the hidden regime and the joint quasi-likelihood of
//! returns and log realized measures.
//!
//! The observable in the measurement equation is `y_t = log x_t`; its density
//! is Gaussian on the log scale with no Jacobian term.

use crate::error::{Error, Result};
use crate::numeric::LN_2PI;
use crate::params::{PhysicalParams, StateDistribution};

/// Standardized return shock implied by the return equation.
#[inline]
pub fn implied_shock(params: &PhysicalParams, ret: f64, log_h: f64) -> f64 {
    let h = log_h.exp();
    let sh = (0.5 * log_h).exp();
    (ret - params.r - params.lambda * sh + 0.5 * h) / sh
}

/// Density of the return given `h`: normal with mean `r + λ√h − h/2`,
/// variance `h`. Does not depend on the regime.
pub fn return_density(ret: f64, h: f64, params: &PhysicalParams) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::NonPositiveVariance(h));
    }
    let z = implied_shock(params, ret, h.ln());
    Ok((-0.5 * (LN_2PI + h.ln() + z * z)).exp())
}

#[inline]
fn log_measurement(p: &PhysicalParams, log_x: f64, z: f64, log_h: f64, j: usize, ln_sigma: f64) -> f64 {
    let mean = p.xi[j] + p.phi * log_h + p.delta1 * z + p.delta2 * (z * z - 1.0);
    let e = (log_x - mean) / p.sigma_u;
    -0.5 * (LN_2PI + e * e) - ln_sigma
}

/// Density of `log x` given the return shock `z`, `log h` and regime `j`.
pub fn measurement_density(
    log_x: f64,
    z: f64,
    log_h: f64,
    j: usize,
    params: &PhysicalParams,
) -> Result<f64> {
    if !(params.sigma_u > 0.0) {
        return Err(Error::InvalidParams(format!("sigma_u = {}", params.sigma_u)));
    }
    if j >= params.n_states() {
        return Err(Error::StateIndex { index: j, n: params.n_states() });
    }
    if !(log_x.is_finite() && z.is_finite() && log_h.is_finite()) {
        return Err(Error::NonFinite("measurement density input"));
    }
    Ok(log_measurement(params, log_x, z, log_h, j, params.sigma_u.ln()).exp())
}

/// Result of one Bayes/prediction step.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterStep {
    /// `P_t(s_t)`.
    pub filt: Vec<f64>,
    /// `P_t(s_{t+1})`.
    pub pred: Vec<f64>,
    pub loglik_increment: f64,
    /// Log-density of the return alone.
    pub log_return_density: f64,
    pub log_h_next: f64,
    pub z: f64,
}

/// Scratch-free step used by both the public step and the full filter.
#[inline]
fn step_into(
    p: &PhysicalParams,
    pred_prev: &[f64],
    ret: f64,
    log_x: f64,
    log_h: f64,
    ln_sigma: f64,
    filt: &mut [f64],
    pred: &mut [f64],
) -> Option<(f64, f64, f64, f64)> {
    let z = implied_shock(p, ret, log_h);
    let ll_r = -0.5 * (LN_2PI + log_h + z * z);
    let mut mx = f64::NEG_INFINITY;
    for (j, f) in filt.iter_mut().enumerate() {
        *f = if pred_prev[j] > 0.0 {
            log_measurement(p, log_x, z, log_h, j, ln_sigma) + pred_prev[j].ln()
        } else {
            f64::NEG_INFINITY
        };
        mx = mx.max(*f);
    }
    if !mx.is_finite() {
        return None;
    }
    let mut s = 0.0;
    for f in filt.iter_mut() {
        *f = (*f - mx).exp();
        s += *f;
    }
    for f in filt.iter_mut() {
        *f /= s;
    }
    let lse = mx + s.ln();
    let n = filt.len();
    for (j, o) in pred.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (i, f) in filt.iter().enumerate() {
            acc += f * p.trans.get(i, j);
        }
        *o = acc;
    }
    // Π' filt keeps the simplex up to rounding; renormalize to stop drift.
    if n > 1 {
        let tot: f64 = pred.iter().sum();
        for o in pred.iter_mut() {
            *o /= tot;
        }
    }
    let lev = z * z - 1.0;
    let log_h_next = p.omega + p.beta * log_h + p.gamma * log_x + p.tau1 * z + p.tau2 * lev;
    Some((ll_r + lse, ll_r, log_h_next, z))
}

/// One filter step from `P_{t−1}(s_t)` and the day-`t` observation.
pub fn filter_step(
    pred_prev: &StateDistribution,
    ret: f64,
    log_x: f64,
    log_h: f64,
    params: &PhysicalParams,
) -> Result<FilterStep> {
    let n = params.n_states();
    if pred_prev.n_states() != n {
        return Err(Error::Dimension { expected: n, got: pred_prev.n_states() });
    }
    let mut filt = vec![0.0; n];
    let mut pred = vec![0.0; n];
    let (inc, ll_r, log_h_next, z) = step_into(
        params,
        pred_prev.probs(),
        ret,
        log_x,
        log_h,
        params.sigma_u.ln(),
        &mut filt,
        &mut pred,
    )
    .ok_or(Error::Underflow(0))?;
    Ok(FilterStep { filt, pred, loglik_increment: inc, log_return_density: ll_r, log_h_next, z })
}

/// Full filter pass.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub loglik: f64,
    /// Per-day likelihood contributions; they sum to `loglik`.
    pub increments: Vec<f64>,
    /// Row `t` is `P_t(s_{t+1})`.
    pub pred_probs: Vec<Vec<f64>>,
    /// Row `t` is `P_t(s_t)`.
    pub filt_probs: Vec<Vec<f64>>,
    /// `log h_t` for each day.
    pub log_h_path: Vec<f64>,
    /// `log h_{t+1}`, known at the close of day `t`.
    pub log_h_next: Vec<f64>,
    pub z_path: Vec<f64>,
}

fn check_inputs(params: &PhysicalParams, returns: &[f64], log_x: &[f64]) -> Result<()> {
    if returns.is_empty() {
        return Err(Error::Empty("return series"));
    }
    if returns.len() != log_x.len() {
        return Err(Error::Dimension { expected: returns.len(), got: log_x.len() });
    }
    params.ensure_valid()
}

fn resolve_init(
    params: &PhysicalParams,
    init: Option<&StateDistribution>,
    init_log_h: Option<f64>,
) -> Result<(Vec<f64>, f64)> {
    let n = params.n_states();
    let p0 = match init {
        Some(d) => {
            if d.n_states() != n {
                return Err(Error::Dimension { expected: n, got: d.n_states() });
            }
            d.clone()
        }
        None => params.trans.stationary_distribution()?,
    };
    let lh = match init_log_h {
        Some(v) => v,
        None => params.log_mean_h(&p0)?,
    };
    Ok((p0.probs().to_vec(), lh))
}

/// Runs the filter over the sample. Defaults: the stationary law for
/// `P_0(s_1)` and the matching mean of `log h` for `log h_1`.
pub fn run_filter(
    params: &PhysicalParams,
    returns: &[f64],
    log_x: &[f64],
    init: Option<&StateDistribution>,
    init_log_h: Option<f64>,
) -> Result<FilterOutput> {
    check_inputs(params, returns, log_x)?;
    let (mut pred_prev, mut log_h) = resolve_init(params, init, init_log_h)?;
    let n = params.n_states();
    let t_len = returns.len();
    let ln_sigma = params.sigma_u.ln();
    let mut out = FilterOutput {
        loglik: 0.0,
        increments: Vec::with_capacity(t_len),
        pred_probs: Vec::with_capacity(t_len),
        filt_probs: Vec::with_capacity(t_len),
        log_h_path: Vec::with_capacity(t_len),
        log_h_next: Vec::with_capacity(t_len),
        z_path: Vec::with_capacity(t_len),
    };
    let mut filt = vec![0.0; n];
    let mut pred = vec![0.0; n];
    let mut total = 0.0;
    for t in 0..t_len {
        let (inc, _, lh_next, z) = step_into(
            params, &pred_prev, returns[t], log_x[t], log_h, ln_sigma, &mut filt, &mut pred,
        )
        .ok_or(Error::Underflow(t))?;
        total += inc;
        out.increments.push(inc);
        out.filt_probs.push(filt.clone());
        out.pred_probs.push(pred.clone());
        out.log_h_path.push(log_h);
        out.log_h_next.push(lh_next);
        out.z_path.push(z);
        std::mem::swap(&mut pred_prev, &mut pred);
        log_h = lh_next;
    }
    if !total.is_finite() {
        return Err(Error::Underflow(t_len));
    }
    out.loglik = total;
    Ok(out)
}

/// Log-likelihood only, without storing the probability paths. When
/// `increments` is given it receives the per-day contributions.
pub fn filter_loglik(
    params: &PhysicalParams,
    returns: &[f64],
    log_x: &[f64],
    mut increments: Option<&mut Vec<f64>>,
) -> Result<f64> {
    check_inputs(params, returns, log_x)?;
    let (mut pred_prev, mut log_h) = resolve_init(params, None, None)?;
    let n = params.n_states();
    let ln_sigma = params.sigma_u.ln();
    let mut filt = vec![0.0; n];
    let mut pred = vec![0.0; n];
    let mut total = 0.0;
    if let Some(v) = increments.as_deref_mut() {
        v.clear();
    }
    for t in 0..returns.len() {
        let (inc, _, lh_next, _) = step_into(
            params, &pred_prev, returns[t], log_x[t], log_h, ln_sigma, &mut filt, &mut pred,
        )
        .ok_or(Error::Underflow(t))?;
        total += inc;
        if let Some(v) = increments.as_deref_mut() {
            v.push(inc);
        }
        std::mem::swap(&mut pred_prev, &mut pred);
        log_h = lh_next;
    }
    if !total.is_finite() {
        return Err(Error::Underflow(returns.len()));
    }
    Ok(total)
}
