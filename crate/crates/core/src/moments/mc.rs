//! Monte Carlo oracle for cumulative returns under Q.

use super::{cumulants_from_raw, Cumulants};
use crate::error::{Error, Result};
use crate::model::{draw_state, next_state};
use crate::params::StateDistribution;
use crate::risk_neutral::QParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Simulates `n_pairs` antithetic pairs of Q paths of length `max(horizons)`
/// and hands the cumulative returns at each requested horizon to `visit`
/// as `(initial state, R at horizons for +shocks, R at horizons for −shocks)`.
/// Both members of a pair share the regime path.
pub fn simulate_cumulative_returns<F>(
    q: &QParams,
    log_h1: f64,
    init: &StateDistribution,
    horizons: &[usize],
    n_pairs: usize,
    seed: u64,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &[f64], &[f64]),
{
    if horizons.is_empty() || horizons.contains(&0) {
        return Err(Error::Empty("horizons"));
    }
    if init.n_states() != q.n_states() {
        return Err(Error::Dimension { expected: q.n_states(), got: init.n_states() });
    }
    let t_max = *horizons.iter().max().unwrap();
    let mut record = vec![usize::MAX; t_max + 1];
    for (k, &h) in horizons.iter().enumerate() {
        record[h] = k;
    }
    let zeta = q.zeta();
    let (rho, c1, c2, gs, r) = (q.rho(), q.c1(), q.c2(), q.gamma_sigma(), q.r);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ra = vec![0.0; horizons.len()];
    let mut rb = vec![0.0; horizons.len()];
    for _ in 0..n_pairs {
        let s0 = draw_state(init.probs(), rng.random::<f64>());
        let mut s = s0;
        let (mut la, mut lb) = (log_h1, log_h1);
        let (mut cum_a, mut cum_b) = (0.0, 0.0);
        for t in 1..=t_max {
            s = next_state(&q.trans, s, rng.random::<f64>());
            let z: f64 = rng.sample(StandardNormal);
            let u: f64 = rng.sample(StandardNormal);
            let (sa, sb) = ((0.5 * la).exp(), (0.5 * lb).exp());
            cum_a += r - 0.5 * sa * sa + sa * z;
            cum_b += r - 0.5 * sb * sb - sb * z;
            let lev = c2 * (z * z - 1.0);
            la = zeta[s] + rho * la + c1 * z + lev + gs * u;
            lb = zeta[s] + rho * lb - c1 * z + lev - gs * u;
            let k = record[t];
            if k != usize::MAX {
                ra[k] = cum_a;
                rb[k] = cum_b;
            }
        }
        visit(s0, &ra, &rb);
    }
    Ok(())
}

/// Monte Carlo estimate of `(μ, σ², κ3, κ4)` at one horizon with batch-means
/// standard errors, plus raw moments with their standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McCumulants {
    pub horizon: usize,
    pub mean: f64,
    pub variance: f64,
    pub kappa3: f64,
    pub kappa4: f64,
    /// Standard errors of `(mean, variance, κ3, κ4)`.
    pub se: [f64; 4],
    pub raw: [f64; 4],
    pub raw_se: [f64; 4],
}

impl McCumulants {
    pub fn values(&self) -> [f64; 4] {
        [self.mean, self.variance, self.kappa3, self.kappa4]
    }
}

#[derive(Clone, Default)]
struct PowerSums {
    n: f64,
    s: [f64; 4],
}

impl PowerSums {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let x2 = x * x;
        self.s[0] += x;
        self.s[1] += x2;
        self.s[2] += x2 * x;
        self.s[3] += x2 * x2;
    }

    fn merge(&mut self, o: &PowerSums) {
        self.n += o.n;
        for k in 0..4 {
            self.s[k] += o.s[k];
        }
    }

    fn raw(&self) -> [f64; 4] {
        [self.s[0] / self.n, self.s[1] / self.n, self.s[2] / self.n, self.s[3] / self.n]
    }
}

/// Shifts raw moments of `Y = X − c` back to raw moments of `X`.
fn unshift(m: [f64; 4], c: f64) -> [f64; 4] {
    let [y1, y2, y3, y4] = m;
    [
        y1 + c,
        y2 + 2.0 * c * y1 + c * c,
        y3 + 3.0 * c * y2 + 3.0 * c * c * y1 + c.powi(3),
        y4 + 4.0 * c * y3 + 6.0 * c * c * y2 + 4.0 * c.powi(3) * y1 + c.powi(4),
    ]
}

fn central(m: [f64; 4]) -> Result<[f64; 4]> {
    let c: Cumulants = cumulants_from_raw(m)?;
    Ok([c.mu, c.sigma * c.sigma, c.kappa3, c.kappa4])
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Cumulants of `R_T` for `T = 1..=t_max` from `2 n_pairs` antithetic paths.
/// Standard errors come from `batches` contiguous batches of pairs.
pub fn mc_cumulants(
    q: &QParams,
    log_h1: f64,
    init: &StateDistribution,
    t_max: usize,
    n_pairs: usize,
    batches: usize,
    seed: u64,
) -> Result<Vec<McCumulants>> {
    if batches < 2 || n_pairs < batches {
        return Err(Error::InvalidParams("need at least two batches with one pair each".into()));
    }
    let horizons: Vec<usize> = (1..=t_max).collect();
    let h1 = log_h1.exp();
    // Centre near the mean so the power sums do not lose precision.
    let shift: Vec<f64> = horizons.iter().map(|&t| t as f64 * (q.r - 0.5 * h1)).collect();
    let per_batch = n_pairs / batches;
    let mut batch_sums: Vec<Vec<PowerSums>> = vec![vec![PowerSums::default(); t_max]; batches];
    let mut idx = 0usize;
    simulate_cumulative_returns(q, log_h1, init, &horizons, per_batch * batches, seed, |_, a, b| {
        let bs = &mut batch_sums[idx / per_batch];
        for k in 0..t_max {
            bs[k].push(a[k] - shift[k]);
            bs[k].push(b[k] - shift[k]);
        }
        idx += 1;
    })?;
    let mut out = Vec::with_capacity(t_max);
    for k in 0..t_max {
        let mut total = PowerSums::default();
        let mut per: Vec<[f64; 4]> = Vec::with_capacity(batches);
        let mut per_raw: Vec<[f64; 4]> = Vec::with_capacity(batches);
        for b in &batch_sums {
            total.merge(&b[k]);
            let raw = unshift(b[k].raw(), shift[k]);
            per_raw.push(raw);
            per.push(central(raw)?);
        }
        let raw = unshift(total.raw(), shift[k]);
        let point = central(raw)?;
        let mut se = [0.0; 4];
        let mut raw_se = [0.0; 4];
        for c in 0..4 {
            se[c] = mean_and_se(&per.iter().map(|v| v[c]).collect::<Vec<_>>()).1;
            raw_se[c] = mean_and_se(&per_raw.iter().map(|v| v[c]).collect::<Vec<_>>()).1;
        }
        out.push(McCumulants {
            horizon: k + 1,
            mean: point[0],
            variance: point[1],
            kappa3: point[2],
            kappa4: point[3],
            se,
            raw,
            raw_se,
        });
    }
    Ok(out)
}
