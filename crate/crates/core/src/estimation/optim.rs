//! Derivative-free maximization: adaptive Nelder–Mead, a coordinate polish,
//! and seeded multi-start.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchSettings {
    pub max_iters: usize,
    /// Relative spread of simplex values at which the search stops.
    pub tolerance: f64,
    pub restarts: usize,
    pub polish: bool,
    pub seed: u64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self { max_iters: 4000, tolerance: 1e-10, restarts: 8, polish: true, seed: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best value after each iteration; never decreases.
    pub trace: Vec<f64>,
}

struct Counted<'a, F> {
    f: &'a F,
    evals: usize,
}

impl<F: Fn(&[f64]) -> f64> Counted<'_, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

/// Maximizes `f` from `x0` with initial simplex edges `scale`. Uses the
/// dimension-adaptive coefficients of Gao and Han.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    scale: &[f64],
    max_iters: usize,
    tolerance: f64,
) -> SearchResult {
    let mut cf = Counted { f, evals: 0 };
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += scale[i];
        pts.push(p);
    }
    // Values are stored negated so the simplex minimizes.
    let mut vals: Vec<f64> = pts.iter().map(|p| -cf.eval(p)).collect();
    let mut trace = Vec::new();
    let mut order: Vec<usize> = (0..=n).collect();
    let mut converged = false;
    let mut it = 0;
    while it < max_iters {
        it += 1;
        order.sort_by(|a, b| vals[*a].total_cmp(&vals[*b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        let spread = vals[worst] - vals[best];
        let diam = pts
            .iter()
            .map(|p| p.iter().zip(&pts[best]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread <= tolerance * (1.0 + vals[best].abs())) || diam < 1e-12 {
            converged = true;
            trace.push(-vals[best]);
            break;
        }
        let mut c = vec![0.0; n];
        for &k in &order[..n] {
            for (ci, pi) in c.iter_mut().zip(&pts[k]) {
                *ci += pi / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> { c.iter().zip(&pts[worst]).map(|(ci, wi)| ci + t * (ci - wi)).collect() };
        let xr = along(alpha);
        let fr = -cf.eval(&xr);
        if fr < vals[best] {
            let xe = along(alpha * gamma);
            let fe = -cf.eval(&xe);
            if fe < fr {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
        } else if fr < vals[second] {
            pts[worst] = xr;
            vals[worst] = fr;
        } else {
            let (xc, fc) = if fr < vals[worst] {
                let x = along(alpha * rho);
                let v = -cf.eval(&x);
                (x, v)
            } else {
                let x = along(-rho);
                let v = -cf.eval(&x);
                (x, v)
            };
            if fc < vals[worst].min(fr) {
                pts[worst] = xc;
                vals[worst] = fc;
            } else {
                let xb = pts[best].clone();
                for &k in &order[1..] {
                    let p: Vec<f64> = xb.iter().zip(&pts[k]).map(|(b, x)| b + sigma * (x - b)).collect();
                    vals[k] = -cf.eval(&p);
                    pts[k] = p;
                }
            }
        }
        let b = vals.iter().copied().fold(f64::INFINITY, f64::min);
        trace.push(-b);
    }
    let best = (0..=n).min_by(|a, b| vals[*a].total_cmp(&vals[*b])).unwrap();
    SearchResult {
        x: pts[best].clone(),
        value: -vals[best],
        iterations: it,
        evaluations: cf.evals,
        converged,
        trace,
    }
}

/// Coordinate-wise pattern search from `x`, accepting only improvements.
pub fn polish<F: Fn(&[f64]) -> f64>(f: &F, start: SearchResult, scale: &[f64], max_evals: usize) -> SearchResult {
    let mut cf = Counted { f, evals: 0 };
    let mut x = start.x;
    let mut fx = start.value;
    let mut trace = start.trace;
    let mut step: Vec<f64> = scale.iter().map(|s| 0.1 * s).collect();
    while cf.evals < max_evals && step.iter().any(|s| *s > 1e-9) {
        for i in 0..x.len() {
            if step[i] <= 1e-9 {
                continue;
            }
            let mut moved = false;
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += dir * step[i];
                let fy = cf.eval(&y);
                if fy > fx {
                    x = y;
                    fx = fy;
                    moved = true;
                    break;
                }
            }
            step[i] *= if moved { 2.0 } else { 0.5 };
            trace.push(fx);
        }
    }
    SearchResult {
        x,
        value: fx,
        iterations: start.iterations,
        evaluations: start.evaluations + cf.evals,
        converged: start.converged,
        trace,
    }
}

/// One restart: simplex, then alternate polish and a fresh small simplex
/// until neither improves.
pub fn local_search<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], scale: &[f64], s: &SearchSettings) -> SearchResult {
    let mut r = nelder_mead(f, x0, scale, s.max_iters, s.tolerance);
    if !s.polish {
        return r;
    }
    for _ in 0..4 {
        let before = r.value;
        let p = polish(f, r, scale, 40 * x0.len());
        let small: Vec<f64> = scale.iter().map(|v| 0.05 * v).collect();
        let mut again = nelder_mead(f, &p.x, &small, s.max_iters, s.tolerance);
        let mut trace = p.trace;
        if again.value < p.value {
            again = SearchResult { x: p.x, value: p.value, trace: vec![], ..again };
        }
        trace.extend(again.trace.iter().map(|v| v.max(p.value)));
        r = SearchResult {
            x: again.x,
            value: again.value,
            iterations: p.iterations + again.iterations,
            evaluations: p.evaluations + again.evaluations,
            converged: again.converged,
            trace,
        };
        if r.value - before <= s.tolerance * (1.0 + before.abs()) {
            break;
        }
    }
    r
}

/// Summary of a multi-start run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiStart {
    pub best: SearchResult,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
}

/// Runs restart 0 from `x0` and the rest from seeded Gaussian
/// perturbations of `x0` with standard deviations `scale`.
pub fn multi_start<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], scale: &[f64], s: &SearchSettings) -> MultiStart {
    let mut best: Option<(usize, SearchResult)> = None;
    let mut values = Vec::with_capacity(s.restarts);
    for k in 0..s.restarts.max(1) {
        let start: Vec<f64> = if k == 0 {
            x0.to_vec()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed.wrapping_add(k as u64));
            x0.iter()
                .zip(scale)
                .map(|(x, sc)| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    x + sc * e
                })
                .collect()
        };
        if !f(&start).is_finite() {
            values.push(f64::NEG_INFINITY);
            continue;
        }
        let r = local_search(f, &start, scale, s);
        values.push(r.value);
        if best.as_ref().is_none_or(|(_, b)| r.value > b.value) {
            best = Some((k, r));
        }
    }
    let (best_restart, best) = best.unwrap_or_else(|| {
        (0, SearchResult { x: x0.to_vec(), value: f(x0), iterations: 0, evaluations: 1, converged: false, trace: vec![] })
    });
    MultiStart { best, best_restart, restart_values: values }
}
