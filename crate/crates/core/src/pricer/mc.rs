//! Monte Carlo option prices under Q, used as an oracle for the expansion.

use super::{OptionKind, OptionQuote};
use crate::error::{Error, Result};
use crate::moments::mc::simulate_cumulative_returns;
use crate::numeric::RunningStats;
use crate::params::StateDistribution;
use crate::risk_neutral::QParams;

/// Price and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McPrice {
    pub price: f64,
    pub se: f64,
}

/// Prices a grid of quotes sharing spot and rate from one set of simulated
/// paths per regime. Regimes are stratified: each state with positive weight
/// gets `n_pairs` antithetic pairs and the results are mixed with `filt`.
pub fn mc_price_grid(
    quotes: &[OptionQuote],
    q: &QParams,
    filt: &StateDistribution,
    log_h1: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<Vec<McPrice>> {
    let first = quotes.first().ok_or(Error::Empty("quotes"))?;
    for qt in quotes {
        qt.validate()?;
        if qt.spot != first.spot || qt.rate != first.rate {
            return Err(Error::InvalidQuote("grid quotes must share spot and rate".into()));
        }
    }
    if n_pairs < 2 {
        return Err(Error::Budget("need at least two antithetic pairs".into()));
    }
    let mut qq = q.clone();
    qq.r = first.rate;
    let mut horizons: Vec<usize> = quotes.iter().map(|x| x.dtm_days).collect();
    horizons.sort_unstable();
    horizons.dedup();
    let slot: Vec<usize> = quotes
        .iter()
        .map(|x| horizons.binary_search(&x.dtm_days).unwrap())
        .collect();

    let n = filt.n_states();
    let mut mean = vec![0.0; quotes.len()];
    let mut var = vec![0.0; quotes.len()];
    for (j, &w) in filt.probs().iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let mut stats = vec![RunningStats::new(); quotes.len()];
        let init = StateDistribution::degenerate(n, j);
        let state_seed = seed ^ (j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        simulate_cumulative_returns(&qq, log_h1, &init, &horizons, n_pairs, state_seed, |_, ra, rb| {
            for (k, qt) in quotes.iter().enumerate() {
                let (a, b) = (ra[slot[k]], rb[slot[k]]);
                let pay = |r: f64| {
                    let st = qt.spot * r.exp();
                    match qt.kind {
                        OptionKind::Call => (st - qt.strike).max(0.0),
                        OptionKind::Put => (qt.strike - st).max(0.0),
                    }
                };
                stats[k].push(0.5 * (pay(a) + pay(b)));
            }
        })?;
        for (k, qt) in quotes.iter().enumerate() {
            let df = qt.discount();
            mean[k] += w * df * stats[k].mean();
            var[k] += (w * df * stats[k].std_error()).powi(2);
        }
    }
    Ok(mean
        .into_iter()
        .zip(var)
        .map(|(price, v)| McPrice { price, se: v.sqrt() })
        .collect())
}

/// Single-quote convenience wrapper.
pub fn mc_price(
    quote: &OptionQuote,
    q: &QParams,
    filt: &StateDistribution,
    log_h1: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<McPrice> {
    Ok(mc_price_grid(std::slice::from_ref(quote), q, filt, log_h1, n_pairs, seed)?[0])
}
