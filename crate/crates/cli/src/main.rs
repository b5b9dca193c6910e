use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use msrg_cli::artifact::FitArtifact;
use msrg_cli::config::RunConfig;
use msrg_cli::io::{self, OptionRecord, PanelFilters};
use msrg_cli::validate::{self, Suite};
use msrg_core::estimation::{estimate, Mode};
use msrg_core::filter::run_filter;
use msrg_core::model::{simulate, SimPath};
use msrg_core::pricer::{self, mc::mc_price_grid, CumulantCache, OptionQuote};
use msrg_core::risk_neutral::{simulate_q, to_q, vix, QParams};
use msrg_core::{presets, StateDistribution};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// First synthetic date written by `simulate` (2000-01-01).
const SIM_EPOCH_DAYS: i64 = 10_957;

#[derive(Parser)]
#[command(name = "msrg", version, about = "Markov-switching Realized GARCH: filtering, estimation and option pricing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Edgeworth,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum Measure {
    P,
    Q,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Two-regime reference parameters.
    Msrg,
    /// Single-regime reference parameters.
    Rg,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the model and write a JSON artifact with the embedded configuration.
    Estimate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        options: Option<PathBuf>,
        #[arg(long)]
        states: Option<usize>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// TOML configuration, or a previous artifact to rerun its configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Filtered and predicted regime probabilities.
    Filter {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Price option quotes.
    Price {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        quotes: PathBuf,
        /// Returns file used to filter regime weights and variance on quote dates.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "edgeworth")]
        method: Method,
        /// Antithetic pairs per regime for `--method mc`.
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Model VIX for each day of a returns file.
    Vix {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a path under P or Q.
    Simulate {
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        days: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, value_enum, default_value = "p")]
        measure: Measure,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an oracle suite; exits with status 3 if any check fails.
    Validate {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        params: PathBuf,
    },
    /// Write a built-in parameter set as an artifact.
    Preset {
        #[arg(long, value_enum, default_value = "msrg")]
        name: Preset,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    POnly,
    Joint,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_estimate(
    data: &Path,
    options: Option<&Path>,
    states: Option<usize>,
    mode: Option<ModeArg>,
    config: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
) -> Result<()> {
    let mut cfg = match config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = states {
        cfg.estimation.n_states = n;
    }
    if let Some(m) = mode {
        cfg.estimation.mode = match m {
            ModeArg::POnly => Mode::POnly,
            ModeArg::Joint => Mode::Joint,
        };
    }
    if let Some(s) = seed {
        cfg.estimation.seed = s;
    }
    cfg.estimation.validate()?;
    let panel = io::load_panel(data, options, cfg.data)?;
    if cfg.estimation.mode == Mode::Joint && !panel.has_options() {
        bail!("joint estimation needs an options file with at least one usable quote");
    }
    let report = estimate(&panel, &cfg.estimation)?;
    let mut art = FitArtifact::new(report.params.clone(), report.kernel.clone());
    art.config = Some(cfg);
    art.report = Some(report);
    art.save(out)
}

fn cmd_filter(data: &Path, params: &Path, out: &Path) -> Result<()> {
    let art = FitArtifact::load(params)?;
    let p = &art.params;
    let panel = io::load_panel(data, None, PanelFilters::default())?;
    let f = run_filter(p, &panel.returns, &panel.log_x, None, None)?;
    let n = p.n_states();
    let mut w = csv_writer(out)?;
    let mut header = vec!["date".to_string(), "log_h".to_string()];
    header.extend((0..n).map(|j| format!("filt_{j}")));
    header.extend((0..n).map(|j| format!("pred_{j}")));
    w.write_record(&header)?;
    for t in 0..panel.len() {
        let mut row = vec![panel.dates[t].clone(), f.log_h_path[t].to_string()];
        row.extend(f.filt_probs[t].iter().map(|v| v.to_string()));
        row.extend(f.pred_probs[t].iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Regime weights and `log h_{t+1}` for each quote.
fn quote_states(art: &FitArtifact, records: &[OptionRecord], data: Option<&Path>) -> Result<Vec<(StateDistribution, f64)>> {
    let p = &art.params;
    match data {
        None => {
            let pi = p.trans.stationary_distribution()?;
            let lh = p.log_mean_h(&pi)?;
            Ok(vec![(pi, lh); records.len()])
        }
        Some(path) => {
            let panel = io::load_panel(path, None, PanelFilters::default())?;
            let f = run_filter(p, &panel.returns, &panel.log_x, None, None)?;
            let index: BTreeMap<&str, usize> = panel.dates.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
            records
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let t = *index
                        .get(r.date.as_str())
                        .with_context(|| format!("quote row {} dated {} has no matching return date", k + 2, r.date))?;
                    Ok((StateDistribution::normalized(f.filt_probs[t].clone())?, f.log_h_next[t]))
                })
                .collect()
        }
    }
}

fn cmd_price(params: &Path, quotes: &Path, data: Option<&Path>, method: Method, paths: usize, seed: u64, out: &Path) -> Result<()> {
    let art = FitArtifact::load(params)?;
    let q = to_q(&art.params, &art.kernel)?;
    let records = io::read_options(quotes)?;
    let states = quote_states(&art, &records, data)?;
    let quotes: Vec<OptionQuote> = records.iter().map(OptionRecord::to_quote).collect();
    let mut rows: Vec<(f64, Option<f64>, Option<f64>, bool)> = vec![(0.0, None, None, false); quotes.len()];
    match method {
        Method::Edgeworth => {
            let cache = CumulantCache::new();
            for (k, qt) in quotes.iter().enumerate() {
                let (w, lh) = &states[k];
                let r = pricer::price(qt, w, &q, *lh, &cache)
                    .with_context(|| format!("pricing quote row {}", k + 2))?;
                rows[k] = (r.price, None, r.implied_vol, r.floored);
            }
        }
        Method::Mc => {
            // Quotes that share a date, spot and rate reuse one set of paths.
            let mut groups: BTreeMap<(String, u64, u64), Vec<usize>> = BTreeMap::new();
            for (k, qt) in quotes.iter().enumerate() {
                groups.entry((records[k].date.clone(), qt.spot.to_bits(), qt.rate.to_bits())).or_default().push(k);
            }
            for (g, idx) in groups.values().enumerate() {
                let grid: Vec<OptionQuote> = idx.iter().map(|&k| quotes[k].clone()).collect();
                let (w, lh) = &states[idx[0]];
                let prices = mc_price_grid(&grid, &q, w, *lh, paths, seed.wrapping_add(g as u64))?;
                for (m, &k) in idx.iter().enumerate() {
                    let iv = pricer::implied_vol(&quotes[k], prices[m].price).ok();
                    rows[k] = (prices[m].price, Some(prices[m].se), iv, false);
                }
            }
        }
    }
    let mut w = csv_writer(out)?;
    w.write_record(["date", "strike", "kind", "dtm_days", "price", "se", "implied_vol", "floored", "market_price"])?;
    for (k, rec) in records.iter().enumerate() {
        let (price, se, iv, floored) = rows[k];
        let kind = match rec.kind {
            pricer::OptionKind::Call => "call",
            pricer::OptionKind::Put => "put",
        };
        w.write_record([
            rec.date.clone(),
            rec.strike.to_string(),
            kind.to_string(),
            quotes[k].dtm_days.to_string(),
            price.to_string(),
            se.map(|v| v.to_string()).unwrap_or_default(),
            iv.map(|v| v.to_string()).unwrap_or_default(),
            floored.to_string(),
            rec.mid_price.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_vix(params: &Path, data: &Path, out: &Path) -> Result<()> {
    let art = FitArtifact::load(params)?;
    let q: QParams = to_q(&art.params, &art.kernel)?;
    let panel = io::load_panel(data, None, PanelFilters::default())?;
    let f = run_filter(&art.params, &panel.returns, &panel.log_x, None, None)?;
    let mut w = csv_writer(out)?;
    w.write_record(["date", "vix"])?;
    for t in 0..panel.len() {
        let filt = StateDistribution::normalized(f.filt_probs[t].clone())?;
        let v = vix(f.log_h_next[t], &filt, &q)?;
        w.write_record([panel.dates[t].clone(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_simulate(params: &Path, days: usize, seed: u64, measure: Measure, out: &Path) -> Result<()> {
    let art = FitArtifact::load(params)?;
    let p = &art.params;
    let pi = p.trans.stationary_distribution()?;
    let lh = p.log_mean_h(&pi)?;
    let path: SimPath = match measure {
        Measure::P => simulate(p, days, seed, lh, &pi)?,
        Measure::Q => simulate_q(&to_q(p, &art.kernel)?, days, seed, lh, &pi)?,
    };
    let mut w = csv_writer(out)?;
    w.write_record(["date", "log_return", "realized_variance", "log_h", "state", "z", "u"])?;
    for t in 0..path.len() {
        w.write_record([
            io::date_from_days(SIM_EPOCH_DAYS + t as i64),
            path.returns[t].to_string(),
            path.log_x[t].exp().to_string(),
            path.log_h[t].to_string(),
            path.states[t].to_string(),
            path.z[t].to_string(),
            path.u[t].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_validate(suite: Suite, params: &Path) -> Result<bool> {
    let art = FitArtifact::load(params)?;
    let checks = validate::run(suite, &art.params, &art.kernel)?;
    let all = checks.iter().all(|c| c.passed);
    let mut stdout = std::io::stdout().lock();
    for c in &checks {
        writeln!(stdout, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
    }
    Ok(all)
}

fn cmd_preset(name: Preset, out: &Path) -> Result<()> {
    let (p, k) = match name {
        Preset::Msrg => presets::reference_msrg(),
        Preset::Rg => presets::reference_rg(),
    };
    FitArtifact::new(p, k).save(out)
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if cause.is::<msrg_core::Error>() {
            return "model";
        }
        if let Some(e) = cause.downcast_ref::<csv::Error>() {
            return if e.is_io_error() { "io" } else { "parse" };
        }
        if cause.is::<serde_json::Error>() || cause.is::<toml::de::Error>() {
            return "parse";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "input"
}

fn report_error(kind: &str, message: String) {
    let body = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{body}");
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Estimate { data, options, states, mode, config, seed, out } => {
            cmd_estimate(&data, options.as_deref(), states, mode, config.as_deref(), seed, &out)?
        }
        Command::Filter { data, params, out } => cmd_filter(&data, &params, &out)?,
        Command::Price { params, quotes, data, method, paths, seed, out } => {
            cmd_price(&params, &quotes, data.as_deref(), method, paths, seed, &out)?
        }
        Command::Vix { params, data, out } => cmd_vix(&params, &data, &out)?,
        Command::Simulate { params, days, seed, measure, out } => cmd_simulate(&params, days, seed, measure, &out)?,
        Command::Validate { suite, params } => {
            if !cmd_validate(suite, &params)? {
                return Ok(ExitCode::from(3));
            }
        }
        Command::Preset { name, out } => cmd_preset(name, &out)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            report_error("usage", e.to_string().trim_end().to_string());
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            report_error(error_kind(&e), format!("{e:#}"));
            ExitCode::FAILURE
        }
    }
}
