//! Ψ and Γ helpers and the named expectation building blocks.
//!
//! Index conventions: `i ≥ 1` is the first date, later factors sit at
//! `i+j`, `i+j+k`, `i+j+k+m` with all gaps ≥ 1. Results are vectors over the
//! initial state `s_0`.

use super::MomentEngine;
use crate::error::{Error, Result};

impl MomentEngine {
    /// Generalized recursion: `θ_1(m,φ) = φ`,
    /// `θ_{n+1}(m,φ) = Δ(G(mρ^{n−1}) + mρ^{n−1}ζ + θ_n(m,φ))`.
    pub fn theta(&self, n: usize, m: f64, phi: &[f64]) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidParams("theta index starts at 1".into()));
        }
        let mut th = phi.to_vec();
        let mut x = m;
        for _ in 1..n {
            let g = self.g(x)?;
            let shifted: Vec<f64> = th.iter().zip(&self.zeta).map(|(t, z)| g + x * z + t).collect();
            th = self.delta(&shifted);
            x *= self.rho;
        }
        Ok(th)
    }

    /// `Ψ_i(m,φ) = E[h_i^m e^{φ's_{i−1}} | h_1, s_0] = h_1^{mρ^{i−1}} e^{θ_i(m,φ)'s_0}`.
    pub fn psi(&self, log_h1: f64, i: usize, m: f64, phi: &[f64]) -> Result<Vec<f64>> {
        let th = self.theta(i, m, phi)?;
        let e = m * self.rho.powi(i as i32 - 1) * log_h1;
        Ok(th.iter().map(|t| (e + t).exp()).collect())
    }

    /// `a_i(j,r,m) = (r/2 + mρ^j) ρ^{i−1}`.
    pub fn a_coef(&self, i: usize, j: usize, r: u32, m: f64) -> f64 {
        (0.5 * r as f64 + m * self.rho.powi(j as i32)) * self.rho.powi(i as i32 - 1)
    }

    /// `b_i(j,r,m,φ) = θ_i(r/2 + mρ^j, Δ(mρ^{j−1}ζ + θ_j(m,φ)))`.
    pub fn b_coef(&self, i: usize, j: usize, r: u32, m: f64, phi: &[f64]) -> Result<Vec<f64>> {
        let x = m * self.rho.powi(j as i32 - 1);
        let th = self.theta(j, m, phi)?;
        let inner: Vec<f64> = th.iter().zip(&self.zeta).map(|(t, z)| x * z + t).collect();
        self.theta(i, 0.5 * r as f64 + m * self.rho.powi(j as i32), &self.delta(&inner))
    }

    /// `c(j,r,m) = E[z^r exp(mρ^{j−1} v)]`.
    pub fn c_coef(&self, j: usize, r: u32, m: f64) -> Result<f64> {
        self.zr_mgf(r, m * self.rho.powi(j as i32 - 1))
    }

    /// `Γ_i(j,r,m,φ) = E[h_i^{r/2} z_i^r h_{i+j}^m e^{φ's_{i+j−1}}]
    ///              = h_1^{a_i} e^{b_i's_0} c(j,r,m)`.
    pub fn gamma_fn(&self, log_h1: f64, i: usize, j: usize, r: u32, m: f64, phi: &[f64]) -> Result<Vec<f64>> {
        let c = self.c_coef(j, r, m)?;
        if c == 0.0 {
            return Ok(vec![0.0; self.n]);
        }
        let a = self.a_coef(i, j, r, m);
        let b = self.b_coef(i, j, r, m, phi)?;
        Ok(b.iter().map(|bi| c * (a * log_h1 + bi).exp()).collect())
    }
}

/// The expectation types needed for fourth-order moments. Each variant names
/// the monomial it evaluates; `√h z` marks a return-shock factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuildingBlock {
    /// `E h_i^m`.
    HPower { i: usize, m: f64 },
    /// `E h_i h_{i+j}`.
    HH { i: usize, j: usize },
    /// `E h_i² h_{i+j}`.
    H2H { i: usize, j: usize },
    /// `E h_i h_{i+j}²`.
    HH2 { i: usize, j: usize },
    /// `E h_i h_{i+j} h_{i+j+k}`.
    HHH { i: usize, j: usize, k: usize },
    /// `E √h_i z_i h_{i+j}`.
    ShockH { i: usize, j: usize },
    /// `E √h_i z_i h_{i+j}²`.
    ShockH2 { i: usize, j: usize },
    /// `E h_i z_i² h_{i+j}`.
    Shock2H { i: usize, j: usize },
    /// `E h_i^{3/2} z_i³ h_{i+j}`.
    Shock3H { i: usize, j: usize },
    /// `E h_i √h_{i+j} z_{i+j} h_{i+j+k}`.
    HShockH { i: usize, j: usize, k: usize },
    /// `E √h_i z_i h_{i+j} h_{i+j+k}`.
    ShockHH { i: usize, j: usize, k: usize },
    /// `E h_i^{3/2} z_i h_{i+j}`.
    H32ShockH { i: usize, j: usize },
    /// `E √h_i z_i √h_{i+j} z_{i+j} h_{i+j+k}`.
    ShockShockH { i: usize, j: usize, k: usize },
    /// `E √h_i z_i √h_{i+j} z_{i+j} h_{i+j+k} h_{i+j+k+m}`.
    ShockShockHH { i: usize, j: usize, k: usize, m: usize },
    /// `E h_i z_i² h_{i+j} h_{i+j+k}`.
    Shock2HH { i: usize, j: usize, k: usize },
    /// `E h_i h_{i+j} z_{i+j}² h_{i+j+k}`.
    HShock2H { i: usize, j: usize, k: usize },
    /// `E √h_i z_i h_{i+j} z_{i+j}² h_{i+j+k}`.
    ShockShock2H { i: usize, j: usize, k: usize },
    /// `E √h_i z_i √h_{i+j} z_{i+j} √h_{i+j+k} z_{i+j+k} h_{i+j+k+m}`.
    ShockChain3H { i: usize, j: usize, k: usize, m: usize },
    /// `E h_i z_i² √h_{i+j} z_{i+j} h_{i+j+k}`.
    Shock2ShockH { i: usize, j: usize, k: usize },
}

impl BuildingBlock {
    /// All variants at small indices, for exhaustive checks.
    pub fn samples(i: usize, j: usize, k: usize, m: usize) -> Vec<BuildingBlock> {
        use BuildingBlock::*;
        vec![
            HPower { i, m: 1.7 },
            HH { i, j },
            H2H { i, j },
            HH2 { i, j },
            HHH { i, j, k },
            ShockH { i, j },
            ShockH2 { i, j },
            Shock2H { i, j },
            Shock3H { i, j },
            HShockH { i, j, k },
            ShockHH { i, j, k },
            H32ShockH { i, j },
            ShockShockH { i, j, k },
            ShockShockHH { i, j, k, m },
            Shock2HH { i, j, k },
            HShock2H { i, j, k },
            ShockShock2H { i, j, k },
            ShockChain3H { i, j, k, m },
            Shock2ShockH { i, j, k },
        ]
    }

    /// The monomial as `(time, h-power, z-power)` factors.
    pub fn factors(&self) -> Vec<(usize, f64, u32)> {
        use BuildingBlock::*;
        match *self {
            HPower { i, m } => vec![(i, m, 0)],
            HH { i, j } => vec![(i, 1.0, 0), (i + j, 1.0, 0)],
            H2H { i, j } => vec![(i, 2.0, 0), (i + j, 1.0, 0)],
            HH2 { i, j } => vec![(i, 1.0, 0), (i + j, 2.0, 0)],
            HHH { i, j, k } => vec![(i, 1.0, 0), (i + j, 1.0, 0), (i + j + k, 1.0, 0)],
            ShockH { i, j } => vec![(i, 0.5, 1), (i + j, 1.0, 0)],
            ShockH2 { i, j } => vec![(i, 0.5, 1), (i + j, 2.0, 0)],
            Shock2H { i, j } => vec![(i, 1.0, 2), (i + j, 1.0, 0)],
            Shock3H { i, j } => vec![(i, 1.5, 3), (i + j, 1.0, 0)],
            HShockH { i, j, k } => vec![(i, 1.0, 0), (i + j, 0.5, 1), (i + j + k, 1.0, 0)],
            ShockHH { i, j, k } => vec![(i, 0.5, 1), (i + j, 1.0, 0), (i + j + k, 1.0, 0)],
            H32ShockH { i, j } => vec![(i, 1.5, 1), (i + j, 1.0, 0)],
            ShockShockH { i, j, k } => vec![(i, 0.5, 1), (i + j, 0.5, 1), (i + j + k, 1.0, 0)],
            ShockShockHH { i, j, k, m } => vec![
                (i, 0.5, 1),
                (i + j, 0.5, 1),
                (i + j + k, 1.0, 0),
                (i + j + k + m, 1.0, 0),
            ],
            Shock2HH { i, j, k } => vec![(i, 1.0, 2), (i + j, 1.0, 0), (i + j + k, 1.0, 0)],
            HShock2H { i, j, k } => vec![(i, 1.0, 0), (i + j, 1.0, 2), (i + j + k, 1.0, 0)],
            ShockShock2H { i, j, k } => vec![(i, 0.5, 1), (i + j, 1.0, 2), (i + j + k, 1.0, 0)],
            ShockChain3H { i, j, k, m } => vec![
                (i, 0.5, 1),
                (i + j, 0.5, 1),
                (i + j + k, 0.5, 1),
                (i + j + k + m, 1.0, 0),
            ],
            Shock2ShockH { i, j, k } => vec![(i, 1.0, 2), (i + j, 0.5, 1), (i + j + k, 1.0, 0)],
        }
    }

    /// Evaluates the block through the Ψ/Γ/a/b/c compositions.
    pub fn evaluate(&self, e: &MomentEngine, log_h1: f64) -> Result<Vec<f64>> {
        use BuildingBlock::*;
        let z = vec![0.0; e.n_states()];
        let rho = e.rho();
        let rp = |p: usize| rho.powi(p as i32);
        let scale = |v: Vec<f64>, c: f64| v.into_iter().map(|x| x * c).collect::<Vec<f64>>();
        match *self {
            HPower { i, m } => e.psi(log_h1, i, m, &z),
            HH { i, j } => e.psi(log_h1, i, 1.0 + rp(j), &e.theta(j + 1, 1.0, &z)?),
            H2H { i, j } => e.psi(log_h1, i, 2.0 + rp(j), &e.theta(j + 1, 1.0, &z)?),
            HH2 { i, j } => e.psi(log_h1, i, 1.0 + 2.0 * rp(j), &e.theta(j + 1, 2.0, &z)?),
            HHH { i, j, k } => {
                let inner = e.theta(k + 1, 1.0, &z)?;
                let mid = e.theta(j + 1, 1.0 + rp(k), &inner)?;
                e.psi(log_h1, i, 1.0 + rp(j) + rp(k + j), &mid)
            }
            ShockH { i, j } => e.gamma_fn(log_h1, i, j, 1, 1.0, &z),
            ShockH2 { i, j } => e.gamma_fn(log_h1, i, j, 1, 2.0, &z),
            Shock2H { i, j } => e.gamma_fn(log_h1, i, j, 2, 1.0, &z),
            Shock3H { i, j } => e.gamma_fn(log_h1, i, j, 3, 1.0, &z),
            HShockH { i, j, k } => {
                let a = e.a_coef(j + 1, k, 1, 1.0);
                let b = e.b_coef(j + 1, k, 1, 1.0, &z)?;
                Ok(scale(e.psi(log_h1, i, 1.0 + a, &b)?, e.c_coef(k, 1, 1.0)?))
            }
            ShockHH { i, j, k } => {
                e.gamma_fn(log_h1, i, j, 1, 1.0 + rp(k), &e.theta(k + 1, 1.0, &z)?)
            }
            H32ShockH { i, j } => {
                let a = e.a_coef(1, j, 1, 1.0);
                let b = e.b_coef(1, j, 1, 1.0, &z)?;
                Ok(scale(e.psi(log_h1, i, 1.0 + a, &b)?, e.c_coef(j, 1, 1.0)?))
            }
            ShockShockH { i, j, k } => {
                let a = e.a_coef(j, k, 1, 1.0);
                let b = e.b_coef(j, k, 1, 1.0, &z)?;
                Ok(scale(e.gamma_fn(log_h1, i, 1, 1, a, &b)?, e.c_coef(k, 1, 1.0)?))
            }
            ShockShockHH { i, j, k, m } => {
                let mm = 1.0 + rp(m);
                let th = e.theta(m + 1, 1.0, &z)?;
                let a = e.a_coef(j, k, 1, mm);
                let b = e.b_coef(j, k, 1, mm, &th)?;
                Ok(scale(e.gamma_fn(log_h1, i, 1, 1, a, &b)?, e.c_coef(k, 1, mm)?))
            }
            Shock2HH { i, j, k } => {
                e.gamma_fn(log_h1, i, j, 2, 1.0 + rp(k), &e.theta(k + 1, 1.0, &z)?)
            }
            HShock2H { i, j, k } => {
                let a = e.a_coef(j + 1, k, 2, 1.0);
                let b = e.b_coef(j + 1, k, 2, 1.0, &z)?;
                Ok(scale(e.psi(log_h1, i, 1.0 + a, &b)?, e.c_coef(k, 2, 1.0)?))
            }
            ShockShock2H { i, j, k } => {
                let a = e.a_coef(j, k, 2, 1.0);
                let b = e.b_coef(j, k, 2, 1.0, &z)?;
                Ok(scale(e.gamma_fn(log_h1, i, 1, 1, a, &b)?, e.c_coef(k, 2, 1.0)?))
            }
            ShockChain3H { i, j, k, m } => {
                let ak = e.a_coef(k, m, 1, 1.0);
                let bk = e.b_coef(k, m, 1, 1.0, &z)?;
                let aj = e.a_coef(j, 1, 1, ak);
                let bj = e.b_coef(j, 1, 1, ak, &bk)?;
                let c = e.c_coef(1, 1, ak)? * e.c_coef(m, 1, 1.0)?;
                Ok(scale(e.gamma_fn(log_h1, i, 1, 1, aj, &bj)?, c))
            }
            Shock2ShockH { i, j, k } => {
                let a = e.a_coef(j, k, 1, 1.0);
                let b = e.b_coef(j, k, 1, 1.0, &z)?;
                Ok(scale(e.gamma_fn(log_h1, i, 1, 2, a, &b)?, e.c_coef(k, 1, 1.0)?))
            }
        }
    }
}
