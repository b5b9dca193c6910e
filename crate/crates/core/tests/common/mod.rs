//! Oracles shared by the integration tests. They are written from the model
//! equations directly and do not call the library's densities.

#![allow(dead_code)]

use msrg_core::PhysicalParams;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Joint log-likelihood by summing over every regime path. The first regime
/// follows `init`, later ones the chain; log h starts at `log_h1`.
pub fn enumerate_loglik(p: &PhysicalParams, init: &[f64], log_h1: f64, returns: &[f64], log_x: &[f64]) -> f64 {
    let n = p.xi.len();
    let t_len = returns.len();
    let mut log_h = log_h1;
    let mut log_f = 0.0;
    let mut g = vec![vec![0.0; n]; t_len];
    for t in 0..t_len {
        let h = log_h.exp();
        let z = (returns[t] - p.r - p.lambda * h.sqrt() + 0.5 * h) / h.sqrt();
        log_f += -0.5 * (LN_2PI + log_h + z * z);
        for j in 0..n {
            let m = p.xi[j] + p.phi * log_h + p.delta1 * z + p.delta2 * (z * z - 1.0);
            let e = (log_x[t] - m) / p.sigma_u;
            g[t][j] = (-0.5 * (LN_2PI + e * e)).exp() / p.sigma_u;
        }
        log_h = p.omega + p.beta * log_h + p.gamma * log_x[t] + p.tau1 * z + p.tau2 * (z * z - 1.0);
    }
    let mut total = 0.0;
    for code in 0..n.pow(t_len as u32) {
        let mut c = code;
        let mut prob = 1.0;
        let mut prev = None;
        for row in &g {
            let s = c % n;
            c /= n;
            let pr = match prev {
                None => init[s],
                Some(i) => p.trans.get(i, s),
            };
            prob *= pr * row[s];
            prev = Some(s);
        }
        total += prob;
    }
    log_f + total.ln()
}

/// Single-regime Realized GARCH path from given shocks.
pub fn rg_path(p: &PhysicalParams, xi: f64, log_h1: f64, z: &[f64], u: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut lh = log_h1;
    let (mut hs, mut rs, mut xs) = (vec![], vec![], vec![]);
    for t in 0..z.len() {
        let h = lh.exp();
        let r = p.r + p.lambda * h.sqrt() - 0.5 * h + h.sqrt() * z[t];
        let lx = xi + p.phi * lh + p.delta1 * z[t] + p.delta2 * (z[t] * z[t] - 1.0) + p.sigma_u * u[t];
        hs.push(lh);
        rs.push(r);
        xs.push(lx);
        lh = p.omega + p.beta * lh + p.gamma * lx + p.tau1 * z[t] + p.tau2 * (z[t] * z[t] - 1.0);
    }
    (hs, rs, xs)
}

/// Mean and standard error from batch means.
pub fn batch_mean_se(xs: &[f64], batches: usize) -> (f64, f64) {
    let per = xs.len() / batches;
    let means: Vec<f64> = (0..batches).map(|b| xs[b * per..(b + 1) * per].iter().sum::<f64>() / per as f64).collect();
    let m = means.iter().sum::<f64>() / batches as f64;
    let v = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches as f64 - 1.0);
    (m, (v / batches as f64).sqrt())
}

/// Mean and standard error of i.i.d. draws.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Risk-neutral paths written from the reduced recursion
/// `log h_{t+1} = ζ_{s_t} + ρ log h_t + c1 z_t + c2 (z_t²−1) + γσ u_t`, with
/// `s_t` drawn from row `s_{t−1}`. Calls `visit(h, z, s)` with 1-based
/// slices (index 0 holds `s_0` and unused entries).
pub fn q_paths<F: FnMut(&[f64], &[f64], &[usize])>(
    q: &msrg_core::QParams,
    log_h1: f64,
    s0: usize,
    horizon: usize,
    paths: usize,
    seed: u64,
    mut visit: F,
) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let zeta = q.zeta();
    let (rho, c1, c2, gs) = (q.rho(), q.c1(), q.c2(), q.gamma_sigma());
    let mut h = vec![0.0; horizon + 1];
    let mut z = vec![0.0; horizon + 1];
    let mut s = vec![0usize; horizon + 1];
    for _ in 0..paths {
        s[0] = s0;
        let mut lh = log_h1;
        for t in 1..=horizon {
            let u0: f64 = rng.random();
            let row = q.trans.row(s[t - 1]);
            let mut acc = 0.0;
            let mut next = row.len() - 1;
            for (j, p) in row.iter().enumerate() {
                acc += p;
                if u0 < acc {
                    next = j;
                    break;
                }
            }
            s[t] = next;
            let zt: f64 = rng.sample(rand_distr::StandardNormal);
            let ut: f64 = rng.sample(rand_distr::StandardNormal);
            h[t] = lh.exp();
            z[t] = zt;
            lh = zeta[next] + rho * lh + c1 * zt + c2 * (zt * zt - 1.0) + gs * ut;
        }
        visit(&h, &z, &s);
    }
}

/// Reference parameters with well-separated regimes that switch every few
/// dozen days, so both appear in short samples.
pub fn two_regime_design() -> (PhysicalParams, msrg_core::KernelParams) {
    use msrg_core::params::{omega_from_log_mean, TransitionMatrix};
    let (mut p, k) = msrg_core::presets::reference_msrg();
    p.xi = vec![-1.3, -0.3];
    p.trans = TransitionMatrix::two_state(0.98, 0.95);
    p.omega = omega_from_log_mean(msrg_core::presets::REFERENCE_LOG_MEAN_H, p.beta, p.gamma, p.phi, &p.xi, &p.trans)
        .unwrap();
    (p, k)
}

/// Simulated returns and realized measures with a call panel priced by the
/// model at the truth. Quotes sit on every `every`-th day; market prices are
/// the model prices plus `noise`·vega·N(0,1), so pricing errors in implied
/// volatility have standard deviation about `noise`.
#[allow(clippy::too_many_arguments)]
pub fn synthetic_panel(
    p: &PhysicalParams,
    k: &msrg_core::KernelParams,
    t_len: usize,
    seed: u64,
    every: usize,
    dtms: &[usize],
    moneyness: &[f64],
    noise: f64,
) -> msrg_core::panel::MarketPanel {
    use msrg_core::panel::{MarketPanel, PanelOption};
    use msrg_core::pricer::{bs_vega, implied_vol, price, CumulantCache, OptionKind, OptionQuote};
    use msrg_core::StateDistribution;
    use rand::{Rng, SeedableRng};

    let pi = p.trans.stationary_distribution().unwrap();
    let path = msrg_core::model::simulate(p, t_len, seed, p.stationary_log_mean_h().unwrap(), &pi).unwrap();
    let panel = MarketPanel::from_series(path.returns, path.log_x).unwrap();
    let f = msrg_core::filter::run_filter(p, &panel.returns, &panel.log_x, None, None).unwrap();
    let q = msrg_core::risk_neutral::to_q(p, k).unwrap();
    let cache = CumulantCache::new();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed ^ 0x5eed);
    let mut options = Vec::new();
    for day in (every / 2..t_len).step_by(every) {
        let w = StateDistribution::normalized(f.filt_probs[day].clone()).unwrap();
        for &dtm in dtms {
            for &m in moneyness {
                let mut quote =
                    OptionQuote { spot: 100.0, strike: 100.0 * m, dtm_days: dtm, rate: p.r, kind: OptionKind::Call, market_price: None };
                let model = price(&quote, &w, &q, f.log_h_next[day], &cache).unwrap().price;
                let Ok(iv) = implied_vol(&quote, model) else { continue };
                let e: f64 = rng.sample(rand_distr::StandardNormal);
                let market = model + noise * e * bs_vega(&quote, iv);
                if implied_vol(&quote, market).is_err() {
                    continue;
                }
                quote.market_price = Some(market);
                options.push(PanelOption { day, quote, dtm_calendar: dtm as f64 * 365.0 / 252.0 });
            }
        }
    }
    panel.with_options(options).unwrap()
}
