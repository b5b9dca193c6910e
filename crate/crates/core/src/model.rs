//! Physical-measure dynamics: one-step transition and path simulation.

use crate::error::{Error, Result};
use crate::params::{PhysicalParams, StateDistribution, TransitionMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Output of [`step`]: the realized measure at `t` and the variance for `t+1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub log_x: f64,
    pub log_h_next: f64,
}

impl Transition {
    /// Return over day `t+1` given its shock.
    pub fn next_return(&self, params: &PhysicalParams, z_next: f64) -> f64 {
        log_return(params, self.log_h_next, z_next)
    }
}

/// `R = r + λ√h − h/2 + √h z`.
#[inline]
pub fn log_return(params: &PhysicalParams, log_h: f64, z: f64) -> f64 {
    let h = log_h.exp();
    let sh = (0.5 * log_h).exp();
    params.r + params.lambda * sh - 0.5 * h + sh * z
}

/// Measurement equation and variance update for state `s` at time `t`.
pub fn step(params: &PhysicalParams, s: usize, log_h: f64, z: f64, u: f64) -> Result<Transition> {
    if !(log_h.is_finite() && z.is_finite() && u.is_finite()) {
        return Err(Error::NonFinite("step input"));
    }
    let n = params.n_states();
    if s >= n {
        return Err(Error::StateIndex { index: s, n });
    }
    Ok(step_unchecked(params, s, log_h, z, u))
}

#[inline]
pub(crate) fn step_unchecked(p: &PhysicalParams, s: usize, log_h: f64, z: f64, u: f64) -> Transition {
    let lev = z * z - 1.0;
    let log_x = p.xi[s] + p.phi * log_h + p.delta1 * z + p.delta2 * lev + p.sigma_u * u;
    let log_h_next = p.omega + p.beta * log_h + p.gamma * log_x + p.tau1 * z + p.tau2 * lev;
    Transition { log_x, log_h_next }
}

/// A simulated sample path. Index `t` holds the day-`t` variance, return,
/// realized measure, regime and shocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPath {
    pub log_h: Vec<f64>,
    pub returns: Vec<f64>,
    pub log_x: Vec<f64>,
    pub states: Vec<usize>,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
}

impl SimPath {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// Draws the next regime from row `s` of the chain with a single uniform.
#[inline]
pub(crate) fn next_state(trans: &TransitionMatrix, s: usize, uniform: f64) -> usize {
    let row = trans.row(s);
    let mut acc = 0.0;
    for (j, p) in row.iter().enumerate() {
        acc += p;
        if uniform < acc {
            return j;
        }
    }
    // Rounding left a sliver above the last cumulative sum: take the last
    // state with positive mass.
    row.iter().rposition(|p| *p > 0.0).unwrap_or(row.len() - 1)
}

#[inline]
pub(crate) fn draw_state(probs: &[f64], uniform: f64) -> usize {
    let mut acc = 0.0;
    for (j, p) in probs.iter().enumerate() {
        acc += p;
        if uniform < acc {
            return j;
        }
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Rebuilds a path from its shocks and regimes.
pub fn replay(
    params: &PhysicalParams,
    init_log_h: f64,
    states: &[usize],
    z: &[f64],
    u: &[f64],
) -> Result<SimPath> {
    let t_len = states.len();
    if z.len() != t_len || u.len() != t_len {
        return Err(Error::Dimension { expected: t_len, got: z.len().min(u.len()) });
    }
    let mut path = SimPath {
        log_h: Vec::with_capacity(t_len),
        returns: Vec::with_capacity(t_len),
        log_x: Vec::with_capacity(t_len),
        states: states.to_vec(),
        z: z.to_vec(),
        u: u.to_vec(),
    };
    let mut log_h = init_log_h;
    for t in 0..t_len {
        let tr = step(params, states[t], log_h, z[t], u[t])?;
        path.log_h.push(log_h);
        path.returns.push(log_return(params, log_h, z[t]));
        path.log_x.push(tr.log_x);
        log_h = tr.log_h_next;
    }
    Ok(path)
}

/// Forward-samples `t_len` days. The first regime is drawn from `init`;
/// later regimes follow the chain.
pub fn simulate(
    params: &PhysicalParams,
    t_len: usize,
    seed: u64,
    init_log_h: f64,
    init: &StateDistribution,
) -> Result<SimPath> {
    if t_len == 0 {
        return Err(Error::Empty("simulation horizon"));
    }
    params.ensure_valid()?;
    if init.n_states() != params.n_states() {
        return Err(Error::Dimension { expected: params.n_states(), got: init.n_states() });
    }
    if !init_log_h.is_finite() {
        return Err(Error::NonFinite("initial log variance"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(t_len);
    let mut z = Vec::with_capacity(t_len);
    let mut u = Vec::with_capacity(t_len);
    let mut s = draw_state(init.probs(), rng.random::<f64>());
    for t in 0..t_len {
        if t > 0 {
            s = next_state(&params.trans, s, rng.random::<f64>());
        }
        states.push(s);
        z.push(rng.sample::<f64, _>(StandardNormal));
        u.push(rng.sample::<f64, _>(StandardNormal));
    }
    replay(params, init_log_h, &states, &z, &u)
}
