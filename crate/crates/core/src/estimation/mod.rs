//! Quasi-maximum-likelihood estimation: returns and realized measures alone,
//! or jointly with vega-weighted option pricing errors.

pub mod optim;
pub mod options;
pub mod sandwich;
pub mod transform;

pub use optim::{multi_start, nelder_mead, MultiStart, SearchResult, SearchSettings};
pub use options::{
    model_vix, option_loglik, option_loglik_terms, prepare_options, price_panel, rmse_iv, vega_weighted_errors,
    OptionLik, PreparedOption, PreparedOptions, RmseReport,
};
pub use sandwich::{robust_se, SandwichResult};
pub use transform::ParamLayout;

use crate::error::{Error, Result};
use crate::filter::{filter_loglik, run_filter};
use crate::moments::MAXN;
use crate::panel::MarketPanel;
use crate::params::PhysicalParams;
use crate::pricer::CumulantCache;
use crate::risk_neutral::KernelParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    POnly,
    Joint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationConfig {
    pub mode: Mode,
    pub n_states: usize,
    pub max_iters: usize,
    pub restarts: usize,
    pub tolerance: f64,
    pub polish: bool,
    pub seed: u64,
    /// Daily risk-free rate held fixed in the return equation.
    pub daily_rate: f64,
    /// Natural-layout start vector; a data-based guess when absent.
    pub start: Option<Vec<f64>>,
    pub compute_se: bool,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            mode: Mode::POnly,
            n_states: 2,
            max_iters: 4000,
            restarts: 8,
            tolerance: 1e-10,
            polish: true,
            seed: 1,
            daily_rate: 0.0,
            start: None,
            compute_se: true,
        }
    }
}

impl EstimationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::Estimation("tolerance must be positive".into()));
        }
        if self.restarts < 1 {
            return Err(Error::Estimation("restarts must be at least 1".into()));
        }
        if self.n_states < 1 || self.n_states > MAXN {
            return Err(Error::Estimation(format!("n_states must be in 1..={MAXN}")));
        }
        if self.max_iters < 1 {
            return Err(Error::Estimation("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    fn search(&self, seed_offset: u64) -> SearchSettings {
        SearchSettings {
            max_iters: self.max_iters,
            tolerance: self.tolerance,
            restarts: self.restarts,
            polish: self.polish,
            seed: self.seed.wrapping_add(seed_offset),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Convergence {
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
    /// Best objective after each iteration of the winning restart.
    pub trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub values: Vec<f64>,
    pub pseudo_inverse: bool,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub config: EstimationConfig,
    pub params: PhysicalParams,
    pub kernel: KernelParams,
    pub log_mean_h: f64,
    pub names: Vec<String>,
    pub natural: Vec<f64>,
    pub loglik_p: f64,
    pub loglik_q: Option<f64>,
    pub loglik_total: f64,
    pub sigma_e: Option<f64>,
    pub sigma_e_floored: bool,
    pub n_options: usize,
    pub dropped_options: usize,
    pub floored_prices: usize,
    pub standard_errors: Option<StandardErrors>,
    /// Why standard errors are missing, if they are.
    pub se_error: Option<String>,
    pub relabeled: bool,
    pub convergence: Convergence,
    pub rmse_iv: Option<RmseReport>,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n.max(1.0))
}

/// Data-based start in the natural layout.
pub fn default_start(panel: &MarketPanel, n_states: usize) -> Vec<f64> {
    let (_, var_r) = mean_var(&panel.returns);
    let (mean_lx, var_lx) = mean_var(&panel.log_x);
    let m = var_r.max(1e-12).ln() - 0.2;
    let xi_bar = mean_lx - m;
    let mut v = vec![0.0, m, 0.6, 0.35, 1.0, -0.1, 0.03, -0.1, 0.1, (0.5 * var_lx.sqrt()).max(0.05)];
    let half = (n_states as f64 - 1.0) / 2.0;
    v.extend((0..n_states).map(|j| xi_bar + 0.2 * (j as f64 - half)));
    let off = if n_states > 1 { 0.02 / (n_states as f64 - 1.0) } else { 0.0 };
    v.extend(std::iter::repeat(off).take(n_states * (n_states - 1)));
    v
}

/// `ℓ_{R,x}` as a function of the unconstrained vector.
fn p_objective<'a>(panel: &'a MarketPanel, lay: ParamLayout, r: f64) -> impl Fn(&[f64]) -> f64 + 'a {
    move |u: &[f64]| {
        let v = lay.decode(u);
        match lay.params_from(&v, r) {
            Ok((p, _)) => filter_loglik(&p, &panel.returns, &panel.log_x, None).unwrap_or(f64::NEG_INFINITY),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

/// `(ℓ_P, option likelihood)` at a natural vector.
fn joint_parts(
    panel: &MarketPanel,
    opts: &PreparedOptions,
    lay: ParamLayout,
    v: &[f64],
    r: f64,
    cache: &CumulantCache,
) -> Result<(f64, OptionLik, Vec<f64>, usize)> {
    let (p, k) = lay.params_from(v, r)?;
    let priced = price_panel(panel, opts, &p, &k, cache)?;
    let e = vega_weighted_errors(opts, &priced.prices)?;
    let lo = option_loglik(&e, panel.len())?;
    Ok((priced.filter.loglik, lo, priced.prices, priced.floored))
}

/// Fits the model to `panel`. Deterministic for a fixed configuration.
pub fn estimate(panel: &MarketPanel, config: &EstimationConfig) -> Result<FitReport> {
    config.validate()?;
    let n = config.n_states;
    let r = config.daily_rate;
    let lay_p = ParamLayout::new(n, false);
    let lay_j = ParamLayout::new(n, true);
    let joint = config.mode == Mode::Joint;

    let start = match &config.start {
        Some(v) if v.len() == lay_p.dim() || v.len() == lay_j.dim() => v.clone(),
        Some(v) => return Err(Error::Dimension { expected: lay_p.dim(), got: v.len() }),
        None => default_start(panel, n),
    };
    let p_start = &start[..lay_p.dim()];
    let u0 = lay_p.encode(p_start)?;
    let fp = p_objective(panel, lay_p, r);
    if !fp(&u0).is_finite() {
        return Err(Error::Estimation("likelihood is not finite at the start".into()));
    }
    let scale_p = lay_p.search_scale();
    let ms_p = multi_start(&fp, &u0, &scale_p, &config.search(0));
    let mut nat_p = lay_p.decode(&ms_p.best.x);

    let opts = prepare_options(panel);
    let cache = CumulantCache::new();
    let (lay, mut natural, ms) = if joint {
        if opts.is_empty() {
            return Err(Error::Estimation("joint mode needs at least one usable option quote".into()));
        }
        let mut v = nat_p.clone();
        match (&config.start, start.len() == lay_j.dim()) {
            (Some(_), true) => v.extend_from_slice(&start[lay_j.chi_offset()..]),
            _ => v.extend(std::iter::repeat(0.0).take(n)),
        }
        let u0 = lay_j.encode(&v)?;
        let fj = |u: &[f64]| -> f64 {
            let v = lay_j.decode(u);
            match joint_parts(panel, &opts, lay_j, &v, r, &cache) {
                Ok((lp, lo, _, _)) => lp + lo.loglik,
                Err(_) => f64::NEG_INFINITY,
            }
        };
        let ms = multi_start(&fj, &u0, &lay_j.search_scale(), &config.search(1_000_003));
        let v = lay_j.decode(&ms.best.x);
        (lay_j, v, ms)
    } else {
        (lay_p, std::mem::take(&mut nat_p), ms_p)
    };

    let perm = lay.relabel(&mut natural);
    let relabeled = perm.iter().enumerate().any(|(i, p)| i != *p);
    let (params, kernel) = lay.params_from(&natural, r)?;
    let filt = run_filter(&params, &panel.returns, &panel.log_x, None, None)?;
    let loglik_p = filt.loglik;

    let mut loglik_q = None;
    let mut sigma_e = None;
    let mut sigma_e_floored = false;
    let mut rmse = None;
    let mut floored_prices = 0;
    if !opts.is_empty() {
        let priced = price_panel(panel, &opts, &params, &kernel, &cache)?;
        let e = vega_weighted_errors(&opts, &priced.prices)?;
        let lo = option_loglik(&e, panel.len())?;
        floored_prices = priced.floored;
        sigma_e = Some(lo.sigma_e);
        sigma_e_floored = lo.floored;
        if joint {
            loglik_q = Some(lo.loglik);
        }
        let v = model_vix(&priced.filter, &params, &kernel).ok();
        rmse = rmse_iv(&opts, &priced.prices, v.as_deref()).ok();
    }
    let loglik_total = loglik_p + loglik_q.unwrap_or(0.0);

    let (standard_errors, se_error) = if config.compute_se {
        let t_len = panel.len();
        let contributions = |v: &[f64]| -> Result<Vec<f64>> {
            let (p, k) = lay.params_from(v, r)?;
            let mut inc = Vec::with_capacity(t_len);
            filter_loglik(&p, &panel.returns, &panel.log_x, Some(&mut inc))?;
            if joint {
                let priced = price_panel(panel, &opts, &p, &k, &cache)?;
                let e = vega_weighted_errors(&opts, &priced.prices)?;
                for (o, term) in opts.items.iter().zip(option_loglik_terms(&e, t_len)?) {
                    inc[o.day] += term;
                }
            }
            Ok(inc)
        };
        // Probability steps stay inside both the entry and its row's diagonal.
        let mut steps = sandwich::default_steps(&natural);
        let (to, w) = (lay.trans_offset(), n.saturating_sub(1));
        for (i, s) in steps.iter_mut().enumerate() {
            if lay.is_probability(i) {
                let row = to + (i - to) / w * w;
                let diag = 1.0 - natural[row..row + w].iter().sum::<f64>();
                *s = s.min(0.25 * natural[i].min(diag));
            }
        }
        if steps.iter().any(|s| !(*s > 1e-12)) {
            (None, Some("a transition probability is on the boundary of the simplex".to_string()))
        } else {
            match robust_se(&natural, &steps, contributions) {
                Ok(s) => (
                    Some(StandardErrors { values: s.se, pseudo_inverse: s.pseudo_inverse, condition: s.condition }),
                    None,
                ),
                Err(e) => (None, Some(e.to_string())),
            }
        }
    } else {
        (None, None)
    };

    Ok(FitReport {
        config: config.clone(),
        log_mean_h: natural[1],
        names: lay.names(),
        natural,
        params,
        kernel,
        loglik_p,
        loglik_q,
        loglik_total,
        sigma_e,
        sigma_e_floored,
        n_options: opts.len(),
        dropped_options: opts.dropped.len(),
        floored_prices,
        standard_errors,
        se_error,
        relabeled,
        convergence: Convergence {
            converged: ms.best.converged,
            iterations: ms.best.iterations,
            evaluations: ms.best.evaluations,
            best_restart: ms.best_restart,
            restart_values: ms.restart_values,
            trace: ms.best.trace,
        },
        rmse_iv: rmse,
    })
}
