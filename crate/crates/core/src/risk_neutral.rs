//! State-dependent pricing kernel, risk-neutral parameters, the shock MGF,
//! the variance term structure and the VIX.

use crate::error::{Error, Result};
use crate::model::{simulate, SimPath};
use crate::params::{PhysicalParams, StateDistribution, TransitionMatrix};
use serde::{Deserialize, Serialize};

/// Kernel coefficients: `ψ` on the return shock (always `−λ`) and `χ_j` on
/// the measurement shock in regime `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    psi: f64,
    chi: Vec<f64>,
}

impl KernelParams {
    /// Rejects any `psi` other than `−lambda`.
    pub fn new(lambda: f64, psi: f64, chi: Vec<f64>) -> Result<Self> {
        if psi != -lambda {
            return Err(Error::InvalidParams(format!(
                "psi must equal -lambda ({}), got {psi}",
                -lambda
            )));
        }
        if chi.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("chi"));
        }
        Ok(Self { psi, chi })
    }

    pub fn pinned(lambda: f64, chi: Vec<f64>) -> Self {
        Self { psi: -lambda, chi }
    }

    pub fn psi(&self) -> f64 {
        self.psi
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }

    fn check(&self, p: &PhysicalParams) -> Result<()> {
        if self.psi != -p.lambda {
            return Err(Error::InvalidParams(format!(
                "kernel psi {} does not match -lambda {}",
                self.psi, -p.lambda
            )));
        }
        if self.chi.len() != p.n_states() {
            return Err(Error::Dimension { expected: p.n_states(), got: self.chi.len() });
        }
        Ok(())
    }
}

/// Risk-neutral parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QParams {
    pub omega_star: f64,
    pub tau1_star: f64,
    pub delta1_star: f64,
    pub xi_star: Vec<f64>,
    pub beta: f64,
    pub gamma: f64,
    pub tau2: f64,
    pub delta2: f64,
    pub phi: f64,
    pub sigma_u: f64,
    pub trans: TransitionMatrix,
    pub r: f64,
}

impl QParams {
    pub fn n_states(&self) -> usize {
        self.xi_star.len()
    }

    pub fn rho(&self) -> f64 {
        self.beta + self.gamma * self.phi
    }

    /// Loading of `z` in the variance innovation.
    pub fn c1(&self) -> f64 {
        self.tau1_star + self.gamma * self.delta1_star
    }

    /// Loading of `z² − 1` in the variance innovation.
    pub fn c2(&self) -> f64 {
        self.tau2 + self.gamma * self.delta2
    }

    /// Loading of `u` in the variance innovation.
    pub fn gamma_sigma(&self) -> f64 {
        self.gamma * self.sigma_u
    }

    /// Regime intercepts of the reduced log-variance recursion,
    /// `ζ_j = ω* + γ ξ*_j`.
    pub fn zeta(&self) -> Vec<f64> {
        self.xi_star.iter().map(|x| self.omega_star + self.gamma * x).collect()
    }

    /// The same recursion written as a physical parameter set with a zero
    /// equity premium, so the simulator can be reused under Q.
    pub fn as_dynamics(&self) -> PhysicalParams {
        PhysicalParams {
            lambda: 0.0,
            omega: self.omega_star,
            beta: self.beta,
            gamma: self.gamma,
            phi: self.phi,
            tau1: self.tau1_star,
            tau2: self.tau2,
            delta1: self.delta1_star,
            delta2: self.delta2,
            sigma_u: self.sigma_u,
            xi: self.xi_star.clone(),
            trans: self.trans.clone(),
            r: self.r,
        }
    }

    /// Mean of log h under Q for the state law `dist`.
    pub fn log_mean_h(&self, dist: &StateDistribution) -> f64 {
        (self.omega_star + self.gamma * dist.mean(&self.xi_star)) / (1.0 - self.rho())
    }

    /// Fingerprint of every field, used as a cache key.
    pub fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.dynamics_fingerprint().hash(&mut h);
        self.r.to_bits().hash(&mut h);
        h.finish()
    }

    /// Fingerprint of the variance dynamics only (everything except `r`).
    pub fn dynamics_fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        for v in [
            self.omega_star,
            self.tau1_star,
            self.delta1_star,
            self.beta,
            self.gamma,
            self.tau2,
            self.delta2,
            self.phi,
            self.sigma_u,
        ] {
            v.to_bits().hash(&mut h);
        }
        for v in &self.xi_star {
            v.to_bits().hash(&mut h);
        }
        for row in self.trans.rows() {
            for v in row {
                v.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

/// Risk-neutral parameters implied by the kernel.
pub fn to_q(p: &PhysicalParams, k: &KernelParams) -> Result<QParams> {
    k.check(p)?;
    let l = p.lambda;
    let shift = -p.delta1 * l + p.delta2 * l * l;
    Ok(QParams {
        omega_star: p.omega - p.tau1 * l + p.tau2 * l * l,
        tau1_star: p.tau1 - 2.0 * p.tau2 * l,
        delta1_star: p.delta1 - 2.0 * p.delta2 * l,
        xi_star: p.xi.iter().zip(&k.chi).map(|(x, c)| x + shift + p.sigma_u * c).collect(),
        beta: p.beta,
        gamma: p.gamma,
        tau2: p.tau2,
        delta2: p.delta2,
        phi: p.phi,
        sigma_u: p.sigma_u,
        trans: p.trans.clone(),
        r: p.r,
    })
}

/// `M = exp(ψz + χ_j u) / E[exp(ψz + χ_j u)]`.
pub fn kernel_value(z: f64, u: f64, j: usize, k: &KernelParams) -> f64 {
    let c = k.chi[j];
    (k.psi * z + c * u - 0.5 * k.psi * k.psi - 0.5 * c * c).exp()
}

/// Log MGF of the variance innovation `v = c1 z + c2 (z²−1) + γσ u`.
#[inline]
pub fn g_raw(theta: f64, c1: f64, c2: f64, gs: f64) -> Result<f64> {
    let d = 1.0 - 2.0 * theta * c2;
    if !(d > 0.0) {
        return Err(Error::MgfDomain(theta * c2));
    }
    Ok(-0.5 * d.ln() - theta * c2 + theta * theta * c1 * c1 / (2.0 * d) + 0.5 * gs * gs * theta * theta)
}

/// `G(θ) = log E^Q[exp(θ v)]`.
pub fn log_mgf_g(theta: f64, q: &QParams) -> Result<f64> {
    g_raw(theta, q.c1(), q.c2(), q.gamma_sigma())
}

/// `θ_1..θ_n` and `κ_1..κ_n` of the split term-structure form.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSequence {
    /// `theta[n-1][j]` is `θ_n` in regime `j`.
    pub theta: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
}

pub fn theta_sequence(n_max: usize, q: &QParams) -> Result<ThetaSequence> {
    if n_max == 0 {
        return Err(Error::Empty("term-structure horizon"));
    }
    let n = q.n_states();
    let rho = q.rho();
    let zeta = q.zeta();
    let mut theta = Vec::with_capacity(n_max);
    let mut kappa = Vec::with_capacity(n_max);
    theta.push(vec![0.0; n]);
    kappa.push(0.0);
    let mut rp = 1.0; // ρ^{k-1}
    let mut buf = vec![0.0; n];
    for k in 1..n_max {
        let prev = &theta[k - 1];
        for j in 0..n {
            buf[j] = rp * zeta[j] + prev[j];
        }
        theta.push(q.trans.delta(&buf));
        kappa.push(kappa[k - 1] + log_mgf_g(rp, q)?);
        rp *= rho;
    }
    Ok(ThetaSequence { theta, kappa })
}

impl ThetaSequence {
    /// `E^Q[h_{t+n} | s_t = j]` given `log h_{t+1}`.
    pub fn expected_h(&self, n: usize, log_h1: f64, j: usize, rho: f64) -> f64 {
        let k = n - 1;
        (self.kappa[k] + rho.powi(k as i32) * log_h1 + self.theta[k][j]).exp()
    }
}

/// `E^Q[h_{t+n} | s_t = j] = exp(κ_n + ρ^{n−1} log h_{t+1} + θ_n[j])`.
pub fn expected_h(n: usize, log_h1: f64, j: usize, q: &QParams) -> Result<f64> {
    if j >= q.n_states() {
        return Err(Error::StateIndex { index: j, n: q.n_states() });
    }
    let ts = theta_sequence(n, q)?;
    Ok(ts.expected_h(n, log_h1, j, q.rho()))
}

/// Expected variances for horizons `1..=n_max`, indexed `[n-1][j]`.
pub fn term_structure(n_max: usize, log_h1: f64, q: &QParams) -> Result<Vec<Vec<f64>>> {
    let ts = theta_sequence(n_max, q)?;
    let rho = q.rho();
    Ok((1..=n_max)
        .map(|n| (0..q.n_states()).map(|j| ts.expected_h(n, log_h1, j, rho)).collect())
        .collect())
}

pub const VIX_HORIZON: usize = 22;

/// Annualization factor `100 √(252/22)`.
pub fn vix_scale() -> f64 {
    100.0 * (252.0 / VIX_HORIZON as f64).sqrt()
}

/// VIX from a sequence of daily expected variances.
pub fn vix_from_term_structure(daily: &[f64]) -> f64 {
    vix_scale() * daily.iter().sum::<f64>().sqrt()
}

/// Model VIX: 22-day expected variance, mixed over the filtered state law.
pub fn vix(log_h1: f64, filt: &StateDistribution, q: &QParams) -> Result<f64> {
    if filt.n_states() != q.n_states() {
        return Err(Error::Dimension { expected: q.n_states(), got: filt.n_states() });
    }
    let ts = term_structure(VIX_HORIZON, log_h1, q)?;
    let daily: Vec<f64> = ts.iter().map(|row| filt.mean(row)).collect();
    Ok(vix_from_term_structure(&daily))
}

/// Gap between the Q and P forecasts of `log h_{t+2}`, mixed with the
/// predicted law of `s_{t+1}`.
pub fn log_vrp(p: &PhysicalParams, k: &KernelParams, pred: &StateDistribution) -> f64 {
    let l = p.lambda;
    -(p.tau1 + p.gamma * p.delta1) * l
        + (p.tau2 + p.gamma * p.delta2) * l * l
        + p.gamma * p.sigma_u * pred.mean(&k.chi)
}

/// Simulates the risk-neutral dynamics.
pub fn simulate_q(
    q: &QParams,
    t_len: usize,
    seed: u64,
    init_log_h: f64,
    init: &StateDistribution,
) -> Result<SimPath> {
    simulate(&q.as_dynamics(), t_len, seed, init_log_h, init)
}
