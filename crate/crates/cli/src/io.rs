//! CSV records and panel assembly.

use anyhow::{anyhow, bail, Context, Result};
use msrg_core::panel::{MarketPanel, PanelOption};
use msrg_core::pricer::{OptionKind, OptionQuote};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

pub const RETURNS_HEADERS: [&str; 3] = ["date", "log_return", "realized_variance"];
pub const OPTION_HEADERS: [&str; 7] =
    ["date", "dtm_calendar_days", "strike", "kind", "mid_price", "underlying", "rate_annualized"];

/// Maturity window applied by the liquidity filter, in calendar days.
pub const MIN_DTM: u32 = 14;
pub const MAX_DTM: u32 = 183;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnsRvRecord {
    pub date: String,
    pub log_return: f64,
    pub realized_variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionRecord {
    pub date: String,
    pub dtm_calendar_days: u32,
    pub strike: f64,
    pub kind: OptionKind,
    pub mid_price: f64,
    pub underlying: f64,
    pub rate_annualized: f64,
}

impl OptionRecord {
    /// Trading days `round(cal·252/365)`, at least one, and the daily rate
    /// that keeps the total discount equal to `annual·cal/365`.
    pub fn to_quote(&self) -> OptionQuote {
        let cal = self.dtm_calendar_days as f64;
        let dtm_days = ((cal * 252.0 / 365.0).round() as usize).max(1);
        OptionQuote {
            spot: self.underlying,
            strike: self.strike,
            dtm_days,
            rate: self.rate_annualized * cal / (365.0 * dtm_days as f64),
            kind: self.kind,
            market_price: Some(self.mid_price),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PanelFilters {
    /// Keep maturities between two weeks and six months.
    pub maturity_filter: bool,
    /// Convert puts to calls by parity.
    pub puts_to_calls: bool,
}

impl Default for PanelFilters {
    fn default() -> Self {
        Self { maturity_filter: true, puts_to_calls: true }
    }
}

/// `YYYY-MM-DD` with a plausible month and day.
pub fn is_iso_date(s: &str) -> bool {
    let b = s.as_bytes();
    if b.len() != 10 || b[4] != b'-' || b[7] != b'-' {
        return false;
    }
    let digits = |r: std::ops::Range<usize>| -> Option<u32> {
        s.get(r).filter(|p| p.bytes().all(|c| c.is_ascii_digit())).and_then(|p| p.parse().ok())
    };
    matches!((digits(0..4), digits(5..7), digits(8..10)), (Some(_), Some(m), Some(d)) if (1..=12).contains(&m) && (1..=31).contains(&d))
}

/// ISO date `days` after 1970-01-01.
pub fn date_from_days(days: i64) -> String {
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z.rem_euclid(146_097);
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let m = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = yoe + era * 400 + i64::from(m <= 2);
    format!("{y:04}-{m:02}-{d:02}")
}

fn check_headers(rdr: &mut csv::Reader<std::fs::File>, required: &[&str], path: &Path) -> Result<()> {
    let headers = rdr.headers().with_context(|| format!("{}: cannot read header", path.display()))?;
    let missing: Vec<&str> = required.iter().copied().filter(|h| !headers.iter().any(|x| x == *h)).collect();
    if !missing.is_empty() {
        bail!("{}: schema mismatch, missing column(s) {}", path.display(), missing.join(", "));
    }
    Ok(())
}

fn line_of(pos: Option<&csv::Position>) -> u64 {
    pos.map(|p| p.line()).unwrap_or(0)
}

pub fn read_returns(path: &Path) -> Result<Vec<ReturnsRvRecord>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    check_headers(&mut rdr, &RETURNS_HEADERS, path)?;
    let mut out: Vec<ReturnsRvRecord> = Vec::new();
    for row in rdr.deserialize::<ReturnsRvRecord>() {
        let rec = row.map_err(|e| {
            let line = line_of(e.position());
            anyhow!("{}:{line}: unparseable row: {e}", path.display())
        })?;
        let line = out.len() + 2;
        if !is_iso_date(&rec.date) {
            bail!("{}:{line}: date {:?} is not YYYY-MM-DD", path.display(), rec.date);
        }
        if !rec.log_return.is_finite() {
            bail!("{}:{line}: log_return is not finite", path.display());
        }
        if !(rec.realized_variance > 0.0 && rec.realized_variance.is_finite()) {
            bail!("{}:{line}: realized_variance must be positive, got {}", path.display(), rec.realized_variance);
        }
        if let Some(prev) = out.last() {
            if rec.date <= prev.date {
                bail!("{}:{line}: dates must be strictly increasing ({} after {})", path.display(), rec.date, prev.date);
            }
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn read_options(path: &Path) -> Result<Vec<OptionRecord>> {
    if std::fs::metadata(path).with_context(|| format!("cannot open {}", path.display()))?.len() == 0 {
        return Ok(Vec::new());
    }
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("cannot open {}", path.display()))?;
    check_headers(&mut rdr, &OPTION_HEADERS, path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<OptionRecord>() {
        let rec = row.map_err(|e| {
            let line = line_of(e.position());
            anyhow!("{}:{line}: unparseable row: {e}", path.display())
        })?;
        let line = out.len() + 2;
        if !is_iso_date(&rec.date) {
            bail!("{}:{line}: date {:?} is not YYYY-MM-DD", path.display(), rec.date);
        }
        for (name, v) in [("strike", rec.strike), ("mid_price", rec.mid_price), ("underlying", rec.underlying)] {
            if !(v > 0.0 && v.is_finite()) {
                bail!("{}:{line}: {name} must be positive, got {v}", path.display());
            }
        }
        if rec.dtm_calendar_days == 0 {
            bail!("{}:{line}: dtm_calendar_days must be at least 1", path.display());
        }
        if !rec.rate_annualized.is_finite() {
            bail!("{}:{line}: rate_annualized is not finite", path.display());
        }
        out.push(rec);
    }
    Ok(out)
}

pub fn write_returns(path: &Path, rows: &[ReturnsRvRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_options(path: &Path, rows: &[OptionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot create {}", path.display()))?;
    if rows.is_empty() {
        w.write_record(OPTION_HEADERS)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Builds a panel from in-memory records. Options must fall on return
/// dates.
pub fn build_panel(returns: &[ReturnsRvRecord], options: &[OptionRecord], filters: PanelFilters) -> Result<MarketPanel> {
    if returns.is_empty() {
        bail!("returns file has no rows");
    }
    let index: HashMap<&str, usize> = returns.iter().enumerate().map(|(i, r)| (r.date.as_str(), i)).collect();
    let panel = MarketPanel::new(
        returns.iter().map(|r| r.date.clone()).collect(),
        returns.iter().map(|r| r.log_return).collect(),
        returns.iter().map(|r| r.realized_variance.ln()).collect(),
    )?;
    let mut opts = Vec::new();
    for (k, o) in options.iter().enumerate() {
        if filters.maturity_filter && !(MIN_DTM..=MAX_DTM).contains(&o.dtm_calendar_days) {
            continue;
        }
        let day = *index
            .get(o.date.as_str())
            .ok_or_else(|| anyhow!("option row {} dated {} has no matching return date", k + 2, o.date))?;
        opts.push(PanelOption { day, quote: o.to_quote(), dtm_calendar: o.dtm_calendar_days as f64 });
    }
    let mut panel = panel.with_options(opts)?;
    if filters.puts_to_calls {
        panel.puts_to_calls();
    }
    Ok(panel)
}

pub fn load_panel(returns: &Path, options: Option<&Path>, filters: PanelFilters) -> Result<MarketPanel> {
    let r = read_returns(returns)?;
    let o = match options {
        Some(p) => read_options(p)?,
        None => Vec::new(),
    };
    build_panel(&r, &o, filters)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dates() {
        assert!(is_iso_date("2019-12-31"));
        assert!(!is_iso_date("2019-13-01"));
        assert!(!is_iso_date("20191231"));
        assert_eq!(date_from_days(0), "1970-01-01");
        assert_eq!(date_from_days(10_957), "2000-01-01");
        assert_eq!(date_from_days(11_016), "2000-02-29");
    }

    #[test]
    fn day_count() {
        let r = OptionRecord {
            date: "2000-01-03".into(),
            dtm_calendar_days: 30,
            strike: 100.0,
            kind: OptionKind::Call,
            mid_price: 2.0,
            underlying: 100.0,
            rate_annualized: 0.05,
        };
        let q = r.to_quote();
        assert_eq!(q.dtm_days, 21);
        assert!((q.total_rate() - 0.05 * 30.0 / 365.0).abs() < 1e-15);
    }
}
