//! Edgeworth-expansion European option prices, Black–Scholes utilities and
//! a Monte Carlo oracle.
//!
//! The standardized cumulative return enters as `R_T = μ − σ z`, with `z`
//! given the second-order Edgeworth density
//! `[1 − κ3/6 H3(z) + (κ4−3)/24 H4(z) + κ3²/72 H6(z)] φ(z)`. Integrating the
//! call payoff against each Hermite term gives the `A0..A6` closed forms.

pub mod black_scholes;
pub mod mc;

pub use black_scholes::{bs_delta, bs_price, bs_total, bs_vega, implied_vol, TRADING_DAYS};

use crate::error::{Error, Result};
use crate::moments::{cumulants_from_raw, Cumulants, MomentEngine, STerms};
use crate::numeric::{norm_cdf, norm_pdf};
use crate::params::StateDistribution;
use crate::risk_neutral::QParams;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    Call,
    Put,
}

/// A European option. `rate` is a daily continuously compounded rate and
/// `dtm_days` counts trading days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionQuote {
    pub spot: f64,
    pub strike: f64,
    pub dtm_days: usize,
    pub rate: f64,
    pub kind: OptionKind,
    pub market_price: Option<f64>,
}

impl OptionQuote {
    pub fn validate(&self) -> Result<()> {
        if !(self.spot > 0.0 && self.strike > 0.0) {
            return Err(Error::InvalidQuote(format!(
                "spot {} and strike {} must be positive",
                self.spot, self.strike
            )));
        }
        if self.dtm_days == 0 {
            return Err(Error::InvalidQuote("maturity must be at least one day".into()));
        }
        if !self.rate.is_finite() {
            return Err(Error::InvalidQuote("rate is not finite".into()));
        }
        Ok(())
    }

    /// `rΔ`: rate times days to maturity.
    pub fn total_rate(&self) -> f64 {
        self.rate * self.dtm_days as f64
    }

    pub fn discount(&self) -> f64 {
        (-self.total_rate()).exp()
    }

    /// `S − K e^{−rΔ}`; call minus put.
    pub fn parity_gap(&self) -> f64 {
        self.spot - self.strike * self.discount()
    }
}

/// Probabilists' Hermite polynomials of order 3, 4 and 6.
pub fn hermite(n: u32, z: f64) -> Result<f64> {
    let z2 = z * z;
    match n {
        3 => Ok(z * (z2 - 3.0)),
        4 => Ok(z2 * z2 - 6.0 * z2 + 3.0),
        6 => Ok(z2 * z2 * z2 - 15.0 * z2 * z2 + 45.0 * z2 - 15.0),
        _ => Err(Error::HermiteOrder(n)),
    }
}

/// Second-order Edgeworth density. Can be negative in the tails.
pub fn edgeworth_density(z: f64, kappa3: f64, kappa4: f64) -> f64 {
    let z2 = z * z;
    let h3 = z * (z2 - 3.0);
    let h4 = z2 * z2 - 6.0 * z2 + 3.0;
    let h6 = z2 * z2 * z2 - 15.0 * z2 * z2 + 45.0 * z2 - 15.0;
    (1.0 - kappa3 / 6.0 * h3 + (kappa4 - 3.0) / 24.0 * h4 + kappa3 * kappa3 / 72.0 * h6) * norm_pdf(z)
}

/// The four payoff integrals `A0, A3, A4, A6`.
pub fn edgeworth_terms(quote: &OptionQuote, c: &Cumulants) -> Result<[f64; 4]> {
    let s = c.sigma;
    if !(s > 0.0) {
        return Err(Error::NonPositiveVariance(s));
    }
    let rt = quote.total_rate();
    let d = ((quote.spot / quote.strike).ln() + c.mu) / s + s;
    // e^{δσ} = e^{μ + σ²/2 − rΔ} makes A0 the lognormal (Black–Scholes) term.
    let f = quote.spot * (c.mu + 0.5 * s * s - rt).exp();
    let (pd, cd) = (norm_pdf(d), norm_cdf(d));
    let a0 = f * cd - quote.strike * (-rt).exp() * norm_cdf(d - s);
    let a3 = f * s * ((2.0 * s - d) * pd + s * s * cd);
    let a4 = f * s * ((d * d - 1.0 - 3.0 * s * (d - s)) * pd + s.powi(3) * cd);
    let dm = d - s;
    let a6 = f
        * s
        * (s.powi(5) * cd
            + (3.0 - 6.0 * d * d + d.powi(4) + 5.0 * s * (d - dm * (s * d - 2.0) - dm.powi(3))) * pd);
    Ok([a0, a3, a4, a6])
}

/// Call price in one regime:
/// `A0 + κ3/6 A3 + (κ4−3)/24 A4 + κ3²/72 A6`.
pub fn call_price_state(quote: &OptionQuote, c: &Cumulants) -> Result<f64> {
    let [a0, a3, a4, a6] = edgeworth_terms(quote, c)?;
    Ok(a0 + c.kappa3 / 6.0 * a3 + (c.kappa4 - 3.0) / 24.0 * a4 + c.kappa3 * c.kappa3 / 72.0 * a6)
}

/// Regime-mixture price with its ingredients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    pub price: f64,
    /// Per-regime prices of the quoted kind, after flooring.
    pub state_prices: Vec<f64>,
    pub weights: Vec<f64>,
    pub cumulants: Vec<Cumulants>,
    pub implied_vol: Option<f64>,
    /// Set when an expansion price was negative and floored at zero.
    pub floored: bool,
}

/// Prices a quote from per-regime cumulants and regime weights.
pub fn price_with_cumulants(
    quote: &OptionQuote,
    weights: &StateDistribution,
    cumulants: &[Cumulants],
) -> Result<PriceResult> {
    quote.validate()?;
    if cumulants.len() != weights.n_states() {
        return Err(Error::Dimension { expected: weights.n_states(), got: cumulants.len() });
    }
    let mut floored = false;
    let mut state_prices = Vec::with_capacity(cumulants.len());
    for c in cumulants {
        let call = call_price_state(quote, c)?;
        let v = match quote.kind {
            OptionKind::Call => call,
            OptionKind::Put => call - quote.parity_gap(),
        };
        if v < 0.0 {
            floored = true;
        }
        state_prices.push(v.max(0.0));
    }
    let price = weights.mean(&state_prices);
    let implied_vol = black_scholes::implied_vol(quote, price).ok();
    Ok(PriceResult {
        price,
        state_prices,
        weights: weights.probs().to_vec(),
        cumulants: cumulants.to_vec(),
        implied_vol,
        floored,
    })
}

/// Memo of moment sums keyed by the risk-neutral dynamics, horizon and
/// `log h_1`. Sums do not depend on the rate, so quotes with different rates
/// share entries. Safe to share across threads.
#[derive(Debug, Default, Clone)]
pub struct CumulantCache {
    inner: Arc<RwLock<HashMap<(u64, usize, u64), Arc<STerms>>>>,
}

impl CumulantCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.inner.read().map(|m| m.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn clear(&self) {
        if let Ok(mut m) = self.inner.write() {
            m.clear();
        }
    }

    /// Per-regime cumulants of `R_T` with daily rate `rate`.
    pub fn cumulants(&self, q: &QParams, log_h1: f64, horizon: usize, rate: f64) -> Result<Vec<Cumulants>> {
        let key = (q.dynamics_fingerprint(), horizon, log_h1.to_bits());
        let hit = self.inner.read().ok().and_then(|m| m.get(&key).cloned());
        let st = match hit {
            Some(s) => s,
            None => {
                let s = Arc::new(MomentEngine::new(q).s_terms(log_h1, horizon)?);
                if let Ok(mut m) = self.inner.write() {
                    m.insert(key, s.clone());
                }
                s
            }
        };
        st.raw_moments(rate, horizon).into_iter().map(cumulants_from_raw).collect()
    }
}

/// Edgeworth price of a quote: per-regime cumulants from the moment engine
/// (at the quote's rate), mixed with the filtered law `filt`.
pub fn price(
    quote: &OptionQuote,
    filt: &StateDistribution,
    q: &QParams,
    log_h1: f64,
    cache: &CumulantCache,
) -> Result<PriceResult> {
    quote.validate()?;
    let cum = cache.cumulants(q, log_h1, quote.dtm_days, quote.rate)?;
    price_with_cumulants(quote, filt, &cum)
}

/// Strikes (in the order given) where consecutive call prices increase.
pub fn monotonicity_violations(strikes: &[f64], call_prices: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..strikes.len()).collect();
    idx.sort_by(|a, b| strikes[*a].total_cmp(&strikes[*b]));
    idx.windows(2)
        .filter(|w| call_prices[w[1]] > call_prices[w[0]] + 1e-12)
        .map(|w| w[1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(3, 0.0).unwrap(), 0.0);
        assert_eq!(hermite(4, 0.0).unwrap(), 3.0);
        assert_eq!(hermite(6, 0.0).unwrap(), -15.0);
        assert_eq!(hermite(3, 2.0).unwrap(), 2.0);
        assert!(hermite(5, 1.0).is_err());
    }

    #[test]
    fn gaussian_collapse() {
        let q = OptionQuote { spot: 100.0, strike: 100.0, dtm_days: 21, rate: 0.0, kind: OptionKind::Call, market_price: None };
        let c = Cumulants { mu: -0.02, sigma: 0.2, kappa3: 0.0, kappa4: 3.0 };
        let p = call_price_state(&q, &c).unwrap();
        assert!((p - 7.965_567_455_405_804).abs() < 1e-12);
    }
}
