//! Aligned daily observations and option quotes.

use crate::error::{Error, Result};
use crate::pricer::{OptionKind, OptionQuote};
use serde::{Deserialize, Serialize};

/// An option quote observed at the close of day `day`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelOption {
    pub day: usize,
    pub quote: OptionQuote,
    /// Calendar days to maturity, used for maturity buckets.
    pub dtm_calendar: f64,
}

impl PanelOption {
    pub fn market_price(&self) -> Result<f64> {
        match self.quote.market_price {
            Some(p) if p > 0.0 && p.is_finite() => Ok(p),
            other => Err(Error::InvalidQuote(format!("market price {other:?} on day {}", self.day))),
        }
    }
}

/// Returns, log realized measures and option quotes on a common calendar.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPanel {
    pub dates: Vec<String>,
    pub returns: Vec<f64>,
    pub log_x: Vec<f64>,
    pub options: Vec<PanelOption>,
}

impl MarketPanel {
    pub fn new(dates: Vec<String>, returns: Vec<f64>, log_x: Vec<f64>) -> Result<Self> {
        if returns.is_empty() {
            return Err(Error::Empty("return series"));
        }
        for len in [dates.len(), log_x.len()] {
            if len != returns.len() {
                return Err(Error::Dimension { expected: returns.len(), got: len });
            }
        }
        if returns.iter().chain(&log_x).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("panel observation"));
        }
        Ok(Self { dates, returns, log_x, options: Vec::new() })
    }

    /// Panel with placeholder dates `0, 1, …`.
    pub fn from_series(returns: Vec<f64>, log_x: Vec<f64>) -> Result<Self> {
        let dates = (0..returns.len()).map(|i| i.to_string()).collect();
        Self::new(dates, returns, log_x)
    }

    pub fn with_options(mut self, options: Vec<PanelOption>) -> Result<Self> {
        for o in &options {
            if o.day >= self.returns.len() {
                return Err(Error::InvalidQuote(format!("option day {} outside sample", o.day)));
            }
            o.quote.validate()?;
            o.market_price()?;
        }
        self.options = options;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn has_options(&self) -> bool {
        !self.options.is_empty()
    }

    /// Replaces each put by the call with the same strike via parity.
    pub fn puts_to_calls(&mut self) {
        for o in &mut self.options {
            if o.quote.kind == OptionKind::Put {
                let gap = o.quote.parity_gap();
                o.quote.kind = OptionKind::Call;
                o.quote.market_price = o.quote.market_price.map(|p| p + gap);
            }
        }
    }
}
