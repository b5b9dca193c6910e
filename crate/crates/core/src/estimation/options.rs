//! Option-panel pieces of the joint likelihood and fit diagnostics.

use crate::error::{Error, Result};
use crate::filter::{run_filter, FilterOutput};
use crate::numeric::LN_2PI;
use crate::panel::MarketPanel;
use crate::params::{PhysicalParams, StateDistribution};
use crate::pricer::{bs_delta, bs_vega, implied_vol, price_with_cumulants, CumulantCache, OptionQuote};
use crate::risk_neutral::{to_q, vix, KernelParams};
use serde::{Deserialize, Serialize};

/// Lower bound on `σ_e`.
pub const SIGMA_E_FLOOR: f64 = 1e-12;

pub const DELTA_EDGES: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];
pub const DTM_EDGES: [f64; 5] = [30.0, 60.0, 90.0, 120.0, 150.0];
pub const VIX_EDGES: [f64; 5] = [15.0, 20.0, 25.0, 30.0, 35.0];

/// A quote with its market implied volatility and Black–Scholes greeks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedOption {
    /// Position in the panel's option list.
    pub index: usize,
    pub day: usize,
    pub quote: OptionQuote,
    pub market: f64,
    pub market_iv: f64,
    pub vega: f64,
    pub delta: f64,
    pub dtm_calendar: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreparedOptions {
    pub items: Vec<PreparedOption>,
    /// Quotes left out, with the reason.
    pub dropped: Vec<(usize, String)>,
}

impl PreparedOptions {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Inverts market prices and computes vegas. Quotes whose implied
/// volatility cannot be found or whose vega vanishes are dropped.
pub fn prepare_options(panel: &MarketPanel) -> PreparedOptions {
    let mut out = PreparedOptions::default();
    for (index, o) in panel.options.iter().enumerate() {
        let market = match o.market_price() {
            Ok(p) => p,
            Err(e) => {
                out.dropped.push((index, e.to_string()));
                continue;
            }
        };
        let iv = match implied_vol(&o.quote, market) {
            Ok(v) => v,
            Err(e) => {
                out.dropped.push((index, e.to_string()));
                continue;
            }
        };
        let vega = bs_vega(&o.quote, iv);
        if !(vega > 1e-12) {
            out.dropped.push((index, format!("vega {vega:e} too small")));
            continue;
        }
        let mut call = o.quote.clone();
        call.kind = crate::pricer::OptionKind::Call;
        out.items.push(PreparedOption {
            index,
            day: o.day,
            quote: o.quote.clone(),
            market,
            market_iv: iv,
            vega,
            delta: bs_delta(&call, iv),
            dtm_calendar: o.dtm_calendar,
        });
    }
    out
}

/// Model prices of the prepared quotes along with the filter pass used to
/// weight regimes.
#[derive(Debug, Clone)]
pub struct PanelPricing {
    pub prices: Vec<f64>,
    pub floored: usize,
    pub filter: FilterOutput,
}

/// Prices each quote on its day with `P_t(s_t)` and `log h_{t+1}` from the
/// filter.
pub fn price_panel(
    panel: &MarketPanel,
    options: &PreparedOptions,
    p: &PhysicalParams,
    k: &KernelParams,
    cache: &CumulantCache,
) -> Result<PanelPricing> {
    let filter = run_filter(p, &panel.returns, &panel.log_x, None, None)?;
    let q = to_q(p, k)?;
    let mut prices = Vec::with_capacity(options.len());
    let mut floored = 0;
    for o in &options.items {
        let w = StateDistribution::normalized(filter.filt_probs[o.day].clone())?;
        let lh = filter.log_h_next[o.day];
        let cum = cache.cumulants(&q, lh, o.quote.dtm_days, o.quote.rate)?;
        let r = price_with_cumulants(&o.quote, &w, &cum)?;
        floored += r.floored as usize;
        prices.push(r.price);
    }
    Ok(PanelPricing { prices, floored, filter })
}

/// Model VIX for each day of the panel.
pub fn model_vix(filter: &FilterOutput, p: &PhysicalParams, k: &KernelParams) -> Result<Vec<f64>> {
    let q = to_q(p, k)?;
    filter
        .filt_probs
        .iter()
        .zip(&filter.log_h_next)
        .map(|(f, lh)| vix(*lh, &StateDistribution::normalized(f.clone())?, &q))
        .collect()
}

/// `e_i = (O_model − O_market)/ν_bs`.
pub fn vega_weighted_errors(options: &PreparedOptions, model: &[f64]) -> Result<Vec<f64>> {
    if model.len() != options.len() {
        return Err(Error::Dimension { expected: options.len(), got: model.len() });
    }
    Ok(options.items.iter().zip(model).map(|(o, m)| (m - o.market) / o.vega).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionLik {
    pub loglik: f64,
    pub sigma_e: f64,
    /// `σ̂_e` hit the lower bound.
    pub floored: bool,
}

fn profiled_sigma(errors: &[f64]) -> (f64, bool) {
    let n = errors.len() as f64;
    let s = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    if s < SIGMA_E_FLOOR {
        (SIGMA_E_FLOOR, true)
    } else {
        (s, false)
    }
}

/// Gaussian log-likelihood of the errors with profiled variance, scaled by
/// `T/N` so the option block carries the weight of `T` days.
pub fn option_loglik(errors: &[f64], t_days: usize) -> Result<OptionLik> {
    if errors.is_empty() {
        return Err(Error::Empty("pricing errors"));
    }
    let n = errors.len() as f64;
    let (sigma_e, floored) = profiled_sigma(errors);
    let s2 = sigma_e * sigma_e;
    let ss: f64 = errors.iter().map(|e| e * e).sum();
    let raw = -0.5 * n * LN_2PI - 0.5 * n * s2.ln() - ss / (2.0 * s2);
    Ok(OptionLik { loglik: raw * t_days as f64 / n, sigma_e, floored })
}

/// Per-quote terms of [`option_loglik`]; they sum to its value.
pub fn option_loglik_terms(errors: &[f64], t_days: usize) -> Result<Vec<f64>> {
    if errors.is_empty() {
        return Err(Error::Empty("pricing errors"));
    }
    let n = errors.len() as f64;
    let (sigma_e, _) = profiled_sigma(errors);
    let s2 = sigma_e * sigma_e;
    let scale = t_days as f64 / n;
    Ok(errors
        .iter()
        .map(|e| scale * (-0.5 * LN_2PI - 0.5 * s2.ln() - e * e / (2.0 * s2)))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub label: String,
    pub rmse: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmseReport {
    pub overall: f64,
    pub count: usize,
    /// Quotes whose model price had no implied volatility.
    pub dropped: usize,
    pub by_delta: Vec<Bucket>,
    pub by_dtm: Vec<Bucket>,
    pub by_vix: Vec<Bucket>,
}

fn bucket_index(x: f64, edges: &[f64]) -> usize {
    edges.iter().take_while(|e| x >= **e).count()
}

fn labels(name: &str, edges: &[f64]) -> Vec<String> {
    let mut v = vec![format!("{name}<{}", edges[0])];
    for w in edges.windows(2) {
        v.push(format!("{}<={name}<{}", w[0], w[1]));
    }
    v.push(format!("{}<={name}", edges[edges.len() - 1]));
    v
}

fn bucketize(name: &str, edges: &[f64], keys: &[f64], sq: &[f64]) -> Vec<Bucket> {
    let nb = edges.len() + 1;
    let mut sums = vec![0.0; nb];
    let mut counts = vec![0usize; nb];
    for (k, s) in keys.iter().zip(sq) {
        let b = bucket_index(*k, edges);
        sums[b] += s;
        counts[b] += 1;
    }
    labels(name, edges)
        .into_iter()
        .enumerate()
        .map(|(b, label)| Bucket {
            label,
            rmse: (counts[b] > 0).then(|| 100.0 * (sums[b] / counts[b] as f64).sqrt()),
            count: counts[b],
        })
        .collect()
}

/// `100·√mean((IV_model − IV_market)²)` overall and by delta, calendar
/// maturity and VIX level. `vix_by_day` is indexed by panel day.
pub fn rmse_iv(options: &PreparedOptions, model: &[f64], vix_by_day: Option<&[f64]>) -> Result<RmseReport> {
    if model.len() != options.len() {
        return Err(Error::Dimension { expected: options.len(), got: model.len() });
    }
    let mut sq = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = 0;
    for (o, m) in options.items.iter().zip(model) {
        match implied_vol(&o.quote, *m) {
            Ok(iv) => {
                sq.push((iv - o.market_iv).powi(2));
                kept.push(o);
            }
            Err(_) => dropped += 1,
        }
    }
    if sq.is_empty() {
        return Err(Error::Empty("implied volatilities"));
    }
    let overall = 100.0 * (sq.iter().sum::<f64>() / sq.len() as f64).sqrt();
    let deltas: Vec<f64> = kept.iter().map(|o| o.delta).collect();
    let dtms: Vec<f64> = kept.iter().map(|o| o.dtm_calendar).collect();
    let by_vix = match vix_by_day {
        Some(v) => {
            let keys: Vec<f64> = kept.iter().map(|o| v[o.day]).collect();
            bucketize("VIX", &VIX_EDGES, &keys, &sq)
        }
        None => Vec::new(),
    };
    Ok(RmseReport {
        overall,
        count: sq.len(),
        dropped,
        by_delta: bucketize("Delta", &DELTA_EDGES, &deltas, &sq),
        by_dtm: bucketize("DTM", &DTM_EDGES, &dtms, &sq),
        by_vix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn option_loglik_constant_and_scaling() {
        let e = [0.01, -0.01, 0.01, -0.01];
        let l = option_loglik(&e, 4).unwrap();
        assert!((l.sigma_e - 0.01).abs() < 1e-15);
        let expect = -2.0 * LN_2PI - 2.0 * (1e-4f64).ln() - 2.0;
        assert!((l.loglik - expect).abs() < 1e-10);
        let terms: f64 = option_loglik_terms(&e, 4).unwrap().iter().sum();
        assert!((terms - l.loglik).abs() < 1e-10);
        let z = option_loglik(&[0.0; 3], 10).unwrap();
        assert!(z.floored && z.sigma_e == SIGMA_E_FLOOR && z.loglik.is_finite());
    }

    #[test]
    fn bucket_edges() {
        assert_eq!(bucket_index(0.29, &DELTA_EDGES), 0);
        assert_eq!(bucket_index(0.3, &DELTA_EDGES), 1);
        assert_eq!(bucket_index(0.75, &DELTA_EDGES), 5);
        assert_eq!(labels("DTM", &DTM_EDGES)[1], "30<=DTM<60");
    }
}
