//! Heston–Nandi GARCH benchmark with a variance-dependent pricing kernel,
//! priced by Monte Carlo under its risk-neutral dynamics.
//!
//! P: `R_{t+1} = r + (λ−½)h_{t+1} + √h_{t+1} z_{t+1}`,
//!    `h_{t+1} = ω + β h_t + τ2 (z_t − τ1 √h_t)²`.
//! Q: same form with `h* = χh`, `ω* = χω`, `τ1* = (λ+τ1−½)/χ + ½`, and
//! `τ2*` from [`TauMap`].

use crate::error::{Error, Result};
use crate::estimation::optim::{multi_start, SearchSettings};
use crate::estimation::options::{option_loglik, vega_weighted_errors, PreparedOptions};
use crate::numeric::{RunningStats, LN_2PI};
use crate::panel::MarketPanel;
use crate::pricer::mc::McPrice;
use crate::pricer::{OptionKind, OptionQuote};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// How `τ2*` is formed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TauMap {
    /// `τ2* = χ² τ2`.
    #[default]
    Corrected,
    /// `τ2* = χ² τ1`, the literal reading of the printed map.
    AsPrinted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HngParams {
    pub lambda: f64,
    pub omega: f64,
    pub beta: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub chi: f64,
    pub r: f64,
}

impl HngParams {
    pub fn persistence(&self) -> f64 {
        self.beta + self.tau2 * self.tau1 * self.tau1
    }

    pub fn validate(&self) -> Result<()> {
        let v = [self.lambda, self.omega, self.beta, self.tau1, self.tau2, self.chi, self.r];
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("HNG parameter"));
        }
        if self.omega < 0.0 || self.tau2 < 0.0 || self.beta < 0.0 {
            return Err(Error::InvalidParams("HNG needs ω, β, τ2 ≥ 0".into()));
        }
        if self.persistence() >= 1.0 {
            return Err(Error::InvalidParams("HNG persistence β+τ2τ1² ≥ 1".into()));
        }
        if !(self.chi > 0.0) {
            return Err(Error::InvalidParams("HNG χ must be positive".into()));
        }
        Ok(())
    }

    /// `(ω + τ2)/(1 − β − τ2τ1²)`.
    pub fn unconditional_variance(&self) -> f64 {
        (self.omega + self.tau2) / (1.0 - self.persistence())
    }
}

/// Risk-neutral HNG parameters; `chi` scales the P variance into `h*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HngQ {
    pub omega: f64,
    pub beta: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub chi: f64,
    pub r: f64,
}

pub fn hng_to_q(p: &HngParams, map: TauMap) -> Result<HngQ> {
    if !(p.chi > 0.0) {
        return Err(Error::InvalidParams("HNG χ must be positive".into()));
    }
    let chi = p.chi;
    let tau2 = match map {
        TauMap::Corrected => chi * chi * p.tau2,
        TauMap::AsPrinted => chi * chi * p.tau1,
    };
    Ok(HngQ {
        omega: chi * p.omega,
        beta: p.beta,
        tau1: (p.lambda + p.tau1 - 0.5) / chi + 0.5,
        tau2,
        chi,
        r: p.r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HngPath {
    /// `h_t` used for the return on day `t`.
    pub h: Vec<f64>,
    pub returns: Vec<f64>,
    pub z: Vec<f64>,
}

/// Simulates the P dynamics from `h_1`.
pub fn hng_simulate(p: &HngParams, t_len: usize, seed: u64, h1: f64) -> Result<HngPath> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut path = HngPath { h: Vec::with_capacity(t_len), returns: Vec::with_capacity(t_len), z: Vec::with_capacity(t_len) };
    let mut h = h1;
    for _ in 0..t_len {
        let z: f64 = StandardNormal.sample(&mut rng);
        path.h.push(h);
        path.returns.push(p.r + (p.lambda - 0.5) * h + h.sqrt() * z);
        path.z.push(z);
        h = p.omega + p.beta * h + p.tau2 * (z - p.tau1 * h.sqrt()).powi(2);
    }
    Ok(path)
}

/// Cumulative Q returns at `horizons` for `n_pairs` antithetic pairs,
/// starting from the P variance `h1` (so `h*_1 = χ h1`).
pub fn hng_simulate_q<F: FnMut(&[f64], &[f64])>(
    q: &HngQ,
    h1: f64,
    horizons: &[usize],
    n_pairs: usize,
    seed: u64,
    mut visit: F,
) -> Result<()> {
    let t_max = *horizons.iter().max().ok_or(Error::Empty("horizons"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ra = vec![0.0; horizons.len()];
    let mut rb = vec![0.0; horizons.len()];
    for _ in 0..n_pairs {
        let (mut ha, mut hb) = (q.chi * h1, q.chi * h1);
        let (mut ca, mut cb) = (0.0, 0.0);
        for t in 1..=t_max {
            let z: f64 = StandardNormal.sample(&mut rng);
            let (sa, sb) = (ha.sqrt(), hb.sqrt());
            ca += q.r - 0.5 * ha + sa * z;
            cb += q.r - 0.5 * hb - sb * z;
            for (k, h) in horizons.iter().enumerate() {
                if *h == t {
                    ra[k] = ca;
                    rb[k] = cb;
                }
            }
            ha = q.omega + q.beta * ha + q.tau2 * (z - q.tau1 * sa).powi(2);
            hb = q.omega + q.beta * hb + q.tau2 * (-z - q.tau1 * sb).powi(2);
        }
        visit(&ra, &rb);
    }
    Ok(())
}

/// Monte Carlo prices of quotes sharing spot and rate.
pub fn hng_mc_price_grid(quotes: &[OptionQuote], q: &HngQ, h1: f64, n_pairs: usize, seed: u64) -> Result<Vec<McPrice>> {
    let first = quotes.first().ok_or(Error::Empty("quotes"))?;
    if quotes.iter().any(|x| x.spot != first.spot || x.rate != first.rate) {
        return Err(Error::InvalidQuote("grid quotes must share spot and rate".into()));
    }
    if n_pairs < 2 {
        return Err(Error::Budget("need at least two antithetic pairs".into()));
    }
    let mut qq = q.clone();
    qq.r = first.rate;
    let horizons: Vec<usize> = quotes.iter().map(|x| x.dtm_days).collect();
    let mut stats = vec![RunningStats::new(); quotes.len()];
    hng_simulate_q(&qq, h1, &horizons, n_pairs, seed, |ra, rb| {
        for (k, qt) in quotes.iter().enumerate() {
            let pay = |r: f64| {
                let st = qt.spot * r.exp();
                match qt.kind {
                    OptionKind::Call => (st - qt.strike).max(0.0),
                    OptionKind::Put => (qt.strike - st).max(0.0),
                }
            };
            stats[k].push(0.5 * (pay(ra[k]) + pay(rb[k])));
        }
    })?;
    Ok(quotes
        .iter()
        .zip(&stats)
        .map(|(qt, s)| McPrice { price: qt.discount() * s.mean(), se: qt.discount() * s.std_error() })
        .collect())
}

/// Gaussian return log-likelihood and the variance path, started at the
/// unconditional variance. `h_next[t]` is `h_{t+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HngFilter {
    pub loglik: f64,
    pub h: Vec<f64>,
    pub h_next: Vec<f64>,
}

pub fn hng_filter(p: &HngParams, returns: &[f64]) -> Result<HngFilter> {
    p.validate()?;
    if returns.is_empty() {
        return Err(Error::Empty("return series"));
    }
    let mut h = p.unconditional_variance();
    let mut out = HngFilter { loglik: 0.0, h: Vec::with_capacity(returns.len()), h_next: Vec::with_capacity(returns.len()) };
    for &r in returns {
        if !(h > 0.0) {
            return Err(Error::NonPositiveVariance(h));
        }
        let z = (r - p.r - (p.lambda - 0.5) * h) / h.sqrt();
        out.loglik += -0.5 * (LN_2PI + h.ln() + z * z);
        out.h.push(h);
        h = p.omega + p.beta * h + p.tau2 * (z - p.tau1 * h.sqrt()).powi(2);
        out.h_next.push(h);
    }
    Ok(out)
}

/// Prices each prepared quote on its day, using common random numbers
/// (`seed`) so the result is smooth in the parameters.
pub fn hng_price_panel(
    p: &HngParams,
    map: TauMap,
    panel: &MarketPanel,
    options: &PreparedOptions,
    n_pairs: usize,
    seed: u64,
) -> Result<(HngFilter, Vec<f64>)> {
    let f = hng_filter(p, &panel.returns)?;
    let q = hng_to_q(p, map)?;
    let mut prices = vec![0.0; options.len()];
    let mut by_day: std::collections::BTreeMap<(usize, u64, u64), Vec<usize>> = Default::default();
    for (i, o) in options.items.iter().enumerate() {
        by_day.entry((o.day, o.quote.spot.to_bits(), o.quote.rate.to_bits())).or_default().push(i);
    }
    for ((day, _, _), idx) in by_day {
        let quotes: Vec<OptionQuote> = idx.iter().map(|i| options.items[*i].quote.clone()).collect();
        let mc = hng_mc_price_grid(&quotes, &q, f.h_next[day], n_pairs, seed)?;
        for (i, m) in idx.iter().zip(mc) {
            prices[*i] = m.price;
        }
    }
    Ok((f, prices))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HngFit {
    pub params: HngParams,
    pub loglik_r: f64,
    pub loglik_o: f64,
    pub sigma_e: f64,
    pub prices: Vec<f64>,
}

/// Joint fit of the return likelihood and the vega-weighted option
/// likelihood over `(λ, ω, β, τ1, τ2, χ)`.
pub fn hng_fit(
    panel: &MarketPanel,
    options: &PreparedOptions,
    start: &HngParams,
    map: TauMap,
    n_pairs: usize,
    settings: &SearchSettings,
) -> Result<HngFit> {
    start.validate()?;
    if options.is_empty() {
        return Err(Error::Empty("option quotes"));
    }
    let r = start.r;
    let decode = |u: &[f64]| HngParams {
        lambda: u[0],
        omega: u[1].exp(),
        beta: u[2].exp(),
        tau1: u[3],
        tau2: u[4].exp(),
        chi: u[5].exp(),
        r,
    };
    let eval = |p: &HngParams| -> Result<(f64, f64, f64, Vec<f64>)> {
        let (f, prices) = hng_price_panel(p, map, panel, options, n_pairs, settings.seed)?;
        let e = vega_weighted_errors(options, &prices)?;
        let lo = option_loglik(&e, panel.len())?;
        Ok((f.loglik, lo.loglik, lo.sigma_e, prices))
    };
    let obj = |u: &[f64]| match eval(&decode(u)) {
        Ok((a, b, _, _)) => a + b,
        Err(_) => f64::NEG_INFINITY,
    };
    let u0 = vec![
        start.lambda,
        start.omega.max(1e-12).ln(),
        start.beta.max(1e-6).ln(),
        start.tau1,
        start.tau2.max(1e-12).ln(),
        start.chi.ln(),
    ];
    let scale = [0.5, 0.5, 0.05, 20.0, 0.5, 0.1];
    let ms = multi_start(&obj, &u0, &scale, settings);
    let params = decode(&ms.best.x);
    let (loglik_r, loglik_o, sigma_e, prices) = eval(&params)?;
    Ok(HngFit { params, loglik_r, loglik_o, sigma_e, prices })
}
