//! Black–Scholes utilities on trading-day maturities.

use super::{OptionKind, OptionQuote};
use crate::error::{Error, Result};
use crate::numeric::{norm_cdf, norm_pdf};

/// Trading days per year used to annualize volatilities.
pub const TRADING_DAYS: f64 = 252.0;

pub const IV_LOWER: f64 = 1e-6;
pub const IV_UPPER: f64 = 5.0;
const IV_PRICE_TOL: f64 = 1e-10;
const IV_VOL_TOL: f64 = 1e-12;

/// Black–Scholes price from total volatility `s = vol √τ` and total rate `rt`.
pub fn bs_total(spot: f64, strike: f64, rt: f64, s: f64, kind: OptionKind) -> f64 {
    let df = (-rt).exp();
    if s <= 0.0 {
        let fwd = spot - strike * df;
        return match kind {
            OptionKind::Call => fwd.max(0.0),
            OptionKind::Put => (-fwd).max(0.0),
        };
    }
    let d1 = ((spot / strike).ln() + rt) / s + 0.5 * s;
    let d2 = d1 - s;
    match kind {
        OptionKind::Call => spot * norm_cdf(d1) - strike * df * norm_cdf(d2),
        OptionKind::Put => strike * df * norm_cdf(-d2) - spot * norm_cdf(-d1),
    }
}

fn tau(q: &OptionQuote) -> f64 {
    q.dtm_days as f64 / TRADING_DAYS
}

/// Price for an annualized volatility.
pub fn bs_price(q: &OptionQuote, vol: f64) -> f64 {
    bs_total(q.spot, q.strike, q.total_rate(), vol * tau(q).sqrt(), q.kind)
}

pub fn d1(q: &OptionQuote, vol: f64) -> f64 {
    let s = vol * tau(q).sqrt();
    ((q.spot / q.strike).ln() + q.total_rate()) / s + 0.5 * s
}

/// `∂price/∂vol` per unit of annualized volatility.
pub fn bs_vega(q: &OptionQuote, vol: f64) -> f64 {
    q.spot * norm_pdf(d1(q, vol)) * tau(q).sqrt()
}

/// Black–Scholes delta of the quote's own kind.
pub fn bs_delta(q: &OptionQuote, vol: f64) -> f64 {
    let n = norm_cdf(d1(q, vol));
    match q.kind {
        OptionKind::Call => n,
        OptionKind::Put => n - 1.0,
    }
}

/// No-arbitrage price bounds `(lower, upper)`.
pub fn price_bounds(q: &OptionQuote) -> (f64, f64) {
    let df = (-q.total_rate()).exp();
    match q.kind {
        OptionKind::Call => ((q.spot - q.strike * df).max(0.0), q.spot),
        OptionKind::Put => ((q.strike * df - q.spot).max(0.0), q.strike * df),
    }
}

/// Annualized implied volatility: Newton steps safeguarded by a bisection
/// bracket on `[1e-6, 5]`, stopping when the price error is below 1e-10.
pub fn implied_vol(q: &OptionQuote, price: f64) -> Result<f64> {
    let (lo_b, hi_b) = price_bounds(q);
    if !(price > lo_b && price < hi_b) {
        return Err(Error::ArbitrageBounds { price, lower: lo_b, upper: hi_b });
    }
    let f = |v: f64| bs_price(q, v) - price;
    let (mut lo, mut hi) = (IV_LOWER, IV_UPPER);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if f_lo > 0.0 || f_hi < 0.0 {
        return Err(Error::ArbitrageBounds {
            price,
            lower: price - f_lo,
            upper: price - f_hi,
        });
    }
    // Start from the Brenner–Subrahmanyam guess, clamped to the bracket.
    let mut v = (price / q.spot * (2.0 * std::f64::consts::PI / tau(q)).sqrt()).clamp(0.05, 1.0);
    for _ in 0..200 {
        let fv = f(v);
        let vega = bs_vega(q, v);
        // Small vega turns a small price gap into a large vol gap.
        if fv.abs() < IV_PRICE_TOL && fv.abs() < IV_VOL_TOL * vega {
            return Ok(v);
        }
        if fv > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let newton = v - fv / vega;
        v = if vega > 1e-12 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 {
            return Ok(v);
        }
    }
    Ok(v)
}
