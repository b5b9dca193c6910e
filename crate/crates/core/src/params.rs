//! Parameter containers: the physical-measure parameters, the regime
//! transition matrix and state distributions.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::fmt;

const SIMPLEX_TOL: f64 = 1e-12;

/// Row-stochastic transition matrix, `p(i, j) = P(s_{t+1} = j | s_t = i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TransitionMatrix {
    n: usize,
    p: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for TransitionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<TransitionMatrix> for Vec<Vec<f64>> {
    fn from(t: TransitionMatrix) -> Self {
        t.rows()
    }
}

impl TransitionMatrix {
    /// Builds a matrix from its rows. Only the shape is checked here;
    /// stochasticity is reported by [`validate`].
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty("transition matrix"));
        }
        let mut p = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::Dimension { expected: n, got: row.len() });
            }
            p.extend_from_slice(row);
        }
        Ok(Self { n, p })
    }

    /// Two-state chain from its diagonal (stay) probabilities.
    pub fn two_state(p00: f64, p11: f64) -> Self {
        Self { n: 2, p: vec![p00, 1.0 - p00, 1.0 - p11, p11] }
    }

    pub fn identity(n: usize) -> Self {
        let mut p = vec![0.0; n * n];
        for i in 0..n {
            p[i * n + i] = 1.0;
        }
        Self { n, p }
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    /// `Δ_i(φ) = log Σ_j p(i,j) exp(φ_j)`, evaluated with a max shift.
    pub fn delta(&self, phi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.delta_into(phi, &mut out);
        out
    }

    pub fn delta_into(&self, phi: &[f64], out: &mut [f64]) {
        debug_assert_eq!(phi.len(), self.n);
        let m = phi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (i, o) in out.iter_mut().enumerate() {
            let s: f64 = self.row(i).iter().zip(phi).map(|(p, f)| p * (f - m).exp()).sum();
            *o = m + s.ln();
        }
    }

    /// `Π w` (conditional expectation of a function of next period's state).
    pub fn apply_into(&self, w: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.row(i).iter().zip(w).map(|(p, x)| p * x).sum();
        }
    }

    /// `Π' p` (one-step-ahead state law).
    pub fn propagate(&self, probs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, pi) in probs.iter().enumerate() {
            for (j, o) in out.iter_mut().enumerate() {
                *o += pi * self.get(i, j);
            }
        }
        out
    }

    /// Invariant law `π' Π = π'`. Fails when the chain has more than one.
    pub fn stationary_distribution(&self) -> Result<StateDistribution> {
        let n = self.n;
        if n == 1 {
            return Ok(StateDistribution::degenerate(1, 0));
        }
        if n == 2 {
            let a = 1.0 - self.get(0, 0);
            let b = 1.0 - self.get(1, 1);
            if a + b <= 0.0 {
                return Err(Error::AmbiguousStationary);
            }
            return StateDistribution::normalized(vec![b / (a + b), a / (a + b)]);
        }
        let a = DMatrix::from_fn(n, n, |i, j| self.get(j, i) - if i == j { 1.0 } else { 0.0 });
        let sv = a.clone().svd(false, false).singular_values;
        let null_dim = sv.iter().filter(|s| **s < 1e-10).count();
        if null_dim > 1 {
            return Err(Error::AmbiguousStationary);
        }
        let mut aug = DMatrix::zeros(n + 1, n);
        aug.view_mut((0, 0), (n, n)).copy_from(&a);
        for j in 0..n {
            aug[(n, j)] = 1.0;
        }
        let mut rhs = nalgebra::DVector::zeros(n + 1);
        rhs[n] = 1.0;
        let svd = aug.svd(true, true);
        let x = svd
            .solve(&rhs, 1e-14)
            .map_err(|e| Error::InvalidParams(format!("stationary solve: {e}")))?;
        StateDistribution::normalized(x.iter().map(|v| v.max(0.0)).collect())
    }
}

/// Probability vector over regimes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StateDistribution {
    probs: Vec<f64>,
}

impl TryFrom<Vec<f64>> for StateDistribution {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<StateDistribution> for Vec<f64> {
    fn from(d: StateDistribution) -> Self {
        d.probs
    }
}

impl StateDistribution {
    /// Strict constructor: entries non-negative, sum one within 1e-12.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty("state distribution"));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(format!("{probs:?}")));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidDistribution(format!("sum {s}")));
        }
        Ok(Self { probs })
    }

    /// Rescales non-negative weights onto the simplex.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidDistribution(format!("{weights:?}")));
        }
        let s: f64 = weights.iter().sum();
        if s <= 0.0 {
            return Err(Error::InvalidDistribution("zero total mass".into()));
        }
        Ok(Self { probs: weights.into_iter().map(|w| w / s).collect() })
    }

    pub fn degenerate(n: usize, j: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[j] = 1.0;
        Self { probs }
    }

    pub fn uniform(n: usize) -> Self {
        Self { probs: vec![1.0 / n as f64; n] }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_states(&self) -> usize {
        self.probs.len()
    }

    pub fn mean(&self, v: &[f64]) -> f64 {
        self.probs.iter().zip(v).map(|(p, x)| p * x).sum()
    }
}

/// Physical-measure parameters. Volatility quantities are daily.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub lambda: f64,
    pub omega: f64,
    pub beta: f64,
    pub gamma: f64,
    pub phi: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub sigma_u: f64,
    pub xi: Vec<f64>,
    pub trans: TransitionMatrix,
    /// Daily continuously compounded risk-free rate.
    pub r: f64,
}

/// One failed invariant, as reported by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonStationary { rho: f64 },
    NonPositiveSigma(f64),
    RowSum { row: usize, sum: f64 },
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    XiLength { expected: usize, got: usize },
    NonFinite(&'static str),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NonStationary { rho } => write!(f, "|β+γφ|≥1 (ρ = {rho})"),
            Self::NonPositiveSigma(s) => write!(f, "sigma_u must be positive (got {s})"),
            Self::RowSum { row, sum } => write!(f, "row sum ≠ 1 (row {row} sums to {sum})"),
            Self::EntryOutOfRange { row, col, value } => {
                write!(f, "transition entry ({row},{col}) = {value} outside [0,1]")
            }
            Self::XiLength { expected, got } => {
                write!(f, "xi has {got} entries, transition matrix has {expected} states")
            }
            Self::NonFinite(name) => write!(f, "{name} is not finite"),
        }
    }
}

/// Reports every violated invariant; an empty list means the set is usable.
pub fn validate(p: &PhysicalParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let scalars = [
        ("lambda", p.lambda),
        ("omega", p.omega),
        ("beta", p.beta),
        ("gamma", p.gamma),
        ("phi", p.phi),
        ("tau1", p.tau1),
        ("tau2", p.tau2),
        ("delta1", p.delta1),
        ("delta2", p.delta2),
        ("sigma_u", p.sigma_u),
        ("r", p.r),
    ];
    for (name, v) in scalars {
        if !v.is_finite() {
            out.push(Violation::NonFinite(name));
        }
    }
    if p.xi.iter().any(|x| !x.is_finite()) {
        out.push(Violation::NonFinite("xi"));
    }
    let rho = p.persistence();
    if !(rho.abs() < 1.0) {
        out.push(Violation::NonStationary { rho });
    }
    if !(p.sigma_u > 0.0) {
        out.push(Violation::NonPositiveSigma(p.sigma_u));
    }
    let n = p.trans.n_states();
    if p.xi.len() != n {
        out.push(Violation::XiLength { expected: n, got: p.xi.len() });
    }
    for i in 0..n {
        let row = p.trans.row(i);
        for (j, &v) in row.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                out.push(Violation::EntryOutOfRange { row: i, col: j, value: v });
            }
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            out.push(Violation::RowSum { row: i, sum: s });
        }
    }
    out
}

impl PhysicalParams {
    pub fn n_states(&self) -> usize {
        self.xi.len()
    }

    /// `ρ = β + γφ`.
    pub fn persistence(&self) -> f64 {
        self.beta + self.gamma * self.phi
    }

    /// Level `(ω + γξ_j)/(1−ρ)` towards which log h reverts while in state `j`
    /// (zero-based).
    pub fn long_run_log_variance(&self, j: usize) -> Result<f64> {
        let n = self.n_states();
        if j >= n {
            return Err(Error::StateIndex { index: j, n });
        }
        let rho = self.persistence();
        if rho == 1.0 {
            return Err(Error::UnitRoot);
        }
        Ok((self.omega + self.gamma * self.xi[j]) / (1.0 - rho))
    }

    /// Mean of log h implied by the state law `dist`: `(ω + γ dist'ξ)/(1−ρ)`.
    /// With the stationary law this is `E[log h]`; it is the default starting
    /// value for every recursion.
    pub fn log_mean_h(&self, dist: &StateDistribution) -> Result<f64> {
        let rho = self.persistence();
        if rho == 1.0 {
            return Err(Error::UnitRoot);
        }
        Ok((self.omega + self.gamma * dist.mean(&self.xi)) / (1.0 - rho))
    }

    pub fn stationary_log_mean_h(&self) -> Result<f64> {
        let pi = self.trans.stationary_distribution()?;
        self.log_mean_h(&pi)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = validate(self);
        if v.is_empty() {
            Ok(())
        } else {
            let msg: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            Err(Error::InvalidParams(msg.join("; ")))
        }
    }
}

/// Intercept `ω` implied by a target `m = E[log h]`:
/// `ω = (1−ρ) m − γ π∞'ξ`.
pub fn omega_from_log_mean(
    m: f64,
    beta: f64,
    gamma: f64,
    phi: f64,
    xi: &[f64],
    trans: &TransitionMatrix,
) -> Result<f64> {
    let pi = trans.stationary_distribution()?;
    let rho = beta + gamma * phi;
    Ok((1.0 - rho) * m - gamma * pi.mean(xi))
}
