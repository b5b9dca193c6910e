//! Oracle suites run by `msrg validate`. Monte Carlo checks use fixed seeds
//! and a 4-standard-error band so one run covers many comparisons.

use msrg_core::filter::{measurement_density, return_density, run_filter};
use msrg_core::model::simulate;
use msrg_core::moments::{mc::mc_cumulants, MomentEngine};
use msrg_core::pricer::{bs_total, call_price_state, edgeworth_density, OptionKind, OptionQuote};
use msrg_core::quadrature::GaussHermite;
use msrg_core::risk_neutral::{kernel_value, to_q};
use msrg_core::{KernelParams, PhysicalParams, StateDistribution};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

const SE_BAND: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Edgeworth,
    Moments,
    Martingale,
    Filter,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(out: &mut Vec<Check>, name: impl Into<String>, passed: bool, detail: String) {
    out.push(Check { name: name.into(), passed, detail });
}

pub fn run(suite: Suite, p: &PhysicalParams, k: &KernelParams) -> anyhow::Result<Vec<Check>> {
    match suite {
        Suite::Edgeworth => edgeworth(p, k),
        Suite::Moments => moments(p, k),
        Suite::Martingale => martingale(p, k),
        Suite::Filter => filter(p),
    }
}

fn start_log_h(p: &PhysicalParams) -> anyhow::Result<f64> {
    Ok(p.stationary_log_mean_h()?)
}

/// Composite Simpson on `[a, b]` with `n` (even) panels.
fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn edgeworth(p: &PhysicalParams, k: &KernelParams) -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    let gh = GaussHermite::new(40);
    let mut worst: f64 = 0.0;
    for (k3, k4) in [(0.0, 3.0), (-0.8, 4.5), (0.5, 2.5), (-1.5, 8.0)] {
        let mass = gh.expect(|z| edgeworth_density(z, k3, k4) / msrg_core::numeric::norm_pdf(z));
        worst = worst.max((mass - 1.0).abs());
    }
    check(&mut out, "density integrates to one", worst < 1e-10, format!("max |mass-1| = {worst:.2e}"));

    let mut worst: f64 = 0.0;
    for days in [5usize, 21, 63] {
        for m in [0.9, 1.0, 1.1] {
            let q = OptionQuote { spot: 100.0, strike: 100.0 * m, dtm_days: days, rate: 1e-4, kind: OptionKind::Call, market_price: None };
            let s = 0.01 * (days as f64).sqrt();
            let c = msrg_core::moments::Cumulants { mu: q.total_rate() - 0.5 * s * s, sigma: s, kappa3: 0.0, kappa4: 3.0 };
            let e = call_price_state(&q, &c)?;
            worst = worst.max((e - bs_total(100.0, q.strike, q.total_rate(), s, OptionKind::Call)).abs());
        }
    }
    check(&mut out, "Gaussian collapse to Black-Scholes", worst < 1e-12, format!("max gap {worst:.2e}"));

    let qp = to_q(p, k)?;
    let lh = start_log_h(p)?;
    let cum = MomentEngine::new(&qp).cumulants(lh, 21)?;
    let mut worst: f64 = 0.0;
    for c in &cum {
        for m in [0.95, 1.0, 1.05] {
            let q = OptionQuote { spot: 100.0, strike: 100.0 * m, dtm_days: 21, rate: qp.r, kind: OptionKind::Call, market_price: None };
            let closed = call_price_state(&q, c)?;
            let kk = ((q.spot / q.strike).ln() + c.mu) / c.sigma;
            let f = |z: f64| (q.spot * (c.mu - c.sigma * z).exp() - q.strike) * edgeworth_density(z, c.kappa3, c.kappa4);
            let numeric = q.discount() * simpson(f, -15.0, kk, 20_000);
            worst = worst.max((closed - numeric).abs() / numeric.abs().max(1e-8));
        }
    }
    check(&mut out, "closed form equals integrated payoff", worst < 1e-7, format!("max rel gap {worst:.2e}"));
    Ok(out)
}

fn moments(p: &PhysicalParams, k: &KernelParams) -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    let q = to_q(p, k)?;
    let e = MomentEngine::new(&q);
    let lh = start_log_h(p)?;
    let h1 = lh.exp();
    let c1 = e.cumulants(lh, 1)?;
    let ok = c1.iter().all(|c| {
        (c.mu - (q.r - 0.5 * h1)).abs() < 1e-12 && (c.sigma * c.sigma - h1).abs() < 1e-12 * h1.max(1.0) && c.kappa3.abs() < 1e-6 && (c.kappa4 - 3.0).abs() < 1e-6
    });
    check(&mut out, "one-day cumulants are Gaussian", ok, format!("{:?}", c1.first()));

    let mut worst: f64 = 0.0;
    for t in 2..=5 {
        let a = e.raw_moments(lh, t)?;
        let b = e.bruteforce_moments(lh, t)?;
        for (x, y) in a.iter().zip(&b) {
            for i in 0..4 {
                worst = worst.max((x[i] - y[i]).abs() / y[i].abs().max(1e-300));
            }
        }
    }
    check(&mut out, "closed form equals brute force (T<=5)", worst < 1e-10, format!("max rel gap {worst:.2e}"));

    let t = 5;
    let c = e.cumulants(lh, t)?;
    for s in 0..q.n_states() {
        let mc = mc_cumulants(&q, lh, &StateDistribution::degenerate(q.n_states(), s), t, 200_000, 20, 17 + s as u64)?;
        let m = &mc[t - 1];
        let exact = [c[s].mu, c[s].sigma * c[s].sigma, c[s].kappa3, c[s].kappa4];
        let z: Vec<f64> = (0..4).map(|i| (m.values()[i] - exact[i]) / m.se[i]).collect();
        let ok = z.iter().all(|v| v.abs() <= SE_BAND);
        check(&mut out, format!("cumulants vs Monte Carlo, T={t}, state {s}"), ok, format!("z-scores {z:.2?}"));
    }
    Ok(out)
}

fn martingale(p: &PhysicalParams, k: &KernelParams) -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    let q = to_q(p, k)?;
    let lh = start_log_h(p)?;
    let n = q.n_states();
    for s in 0..n {
        let init = StateDistribution::degenerate(n, s);
        let mut sums = vec![msrg_core::numeric::RunningStats::new(); 2];
        let horizons = [1usize, 21];
        msrg_core::moments::mc::simulate_cumulative_returns(&q, lh, &init, &horizons, 100_000, 101 + s as u64, |_, a, b| {
            for i in 0..2 {
                sums[i].push(0.5 * (a[i].exp() + b[i].exp()));
            }
        })?;
        for (i, t) in horizons.iter().enumerate() {
            let target = (q.r * *t as f64).exp();
            let z = (sums[i].mean() - target) / sums[i].std_error();
            check(&mut out, format!("E^Q[exp(R_{t})] = exp(rT), state {s}"), z.abs() <= SE_BAND, format!("z = {z:.2}"));
        }
    }
    let h = lh.exp();
    for j in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(7 + j as u64);
        let mut m1 = msrg_core::numeric::RunningStats::new();
        let mut m2 = msrg_core::numeric::RunningStats::new();
        for _ in 0..200_000 {
            let z: f64 = StandardNormal.sample(&mut rng);
            let u: f64 = StandardNormal.sample(&mut rng);
            let m = kernel_value(z, u, j, k);
            m1.push(m);
            let r = p.r + p.lambda * h.sqrt() - 0.5 * h + h.sqrt() * z;
            m2.push(m * r.exp());
        }
        let z1 = (m1.mean() - 1.0) / m1.std_error();
        let z2 = (m2.mean() - p.r.exp()) / m2.std_error();
        check(&mut out, format!("E^P[M] = 1, state {j}"), z1.abs() <= SE_BAND, format!("z = {z1:.2}"));
        check(&mut out, format!("E^P[M exp(R)] = exp(r), state {j}"), z2.abs() <= SE_BAND, format!("z = {z2:.2}"));
    }
    Ok(out)
}

/// Sum over every regime path of the joint measurement likelihood.
pub fn enumerate_loglik(p: &PhysicalParams, returns: &[f64], log_x: &[f64]) -> anyhow::Result<f64> {
    let n = p.n_states();
    let t_len = returns.len();
    let pi0 = p.trans.stationary_distribution()?;
    let mut log_h = p.log_mean_h(&pi0)?;
    let mut ret_part = 0.0;
    let mut dens = vec![vec![0.0; n]; t_len];
    for t in 0..t_len {
        let h = log_h.exp();
        ret_part += return_density(returns[t], h, p)?.ln();
        let z = msrg_core::filter::implied_shock(p, returns[t], log_h);
        for (j, d) in dens[t].iter_mut().enumerate() {
            *d = measurement_density(log_x[t], z, log_h, j, p)?;
        }
        log_h = p.omega + p.beta * log_h + p.gamma * log_x[t] + p.tau1 * z + p.tau2 * (z * z - 1.0);
    }
    let total = n.pow(t_len as u32);
    let mut sum = 0.0;
    for code in 0..total {
        let mut c = code;
        let mut prob = 1.0;
        let mut prev = usize::MAX;
        for row in &dens {
            let s = c % n;
            c /= n;
            prob *= if prev == usize::MAX { pi0.probs()[s] } else { p.trans.get(prev, s) } * row[s];
            prev = s;
        }
        sum += prob;
    }
    Ok(ret_part + sum.ln())
}

fn filter(p: &PhysicalParams) -> anyhow::Result<Vec<Check>> {
    let mut out = Vec::new();
    let pi = p.trans.stationary_distribution()?;
    let path = simulate(p, 10, 3, p.log_mean_h(&pi)?, &pi)?;
    let f = run_filter(p, &path.returns, &path.log_x, None, None)?;
    let e = enumerate_loglik(p, &path.returns, &path.log_x)?;
    let gap = (f.loglik - e).abs();
    check(&mut out, "filter equals path enumeration (T=10)", gap < 1e-10, format!("gap {gap:.2e}"));
    let worst = f
        .filt_probs
        .iter()
        .chain(&f.pred_probs)
        .map(|r| (r.iter().sum::<f64>() - 1.0).abs() + r.iter().map(|v| (-v).max(0.0)).sum::<f64>())
        .fold(0.0, f64::max);
    check(&mut out, "probability rows in the simplex", worst < 1e-12, format!("max deviation {worst:.2e}"));
    Ok(out)
}
