//! Parameter vectors: the natural layout reported to users and the
//! unconstrained encoding searched by the optimizer.
//!
//! Natural layout: `λ, m, β, γ, φ, τ1, τ2, δ1, δ2, σ_u, ξ_1..ξ_N`, the
//! off-diagonal transition probabilities row by row, then `χ_1..χ_N` in
//! joint mode. `m = E[log h]` replaces `ω`.

use crate::error::{Error, Result};
use crate::params::{omega_from_log_mean, PhysicalParams, TransitionMatrix};
use crate::risk_neutral::KernelParams;
use serde::{Deserialize, Serialize};

const N_SCALAR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    pub n_states: usize,
    pub with_chi: bool,
}

impl ParamLayout {
    pub fn new(n_states: usize, with_chi: bool) -> Self {
        Self { n_states, with_chi }
    }

    fn n_trans(&self) -> usize {
        self.n_states * (self.n_states - 1)
    }

    pub fn xi_offset(&self) -> usize {
        N_SCALAR
    }

    pub fn trans_offset(&self) -> usize {
        N_SCALAR + self.n_states
    }

    pub fn chi_offset(&self) -> usize {
        self.trans_offset() + self.n_trans()
    }

    pub fn dim(&self) -> usize {
        self.chi_offset() + if self.with_chi { self.n_states } else { 0 }
    }

    pub fn names(&self) -> Vec<String> {
        let mut v: Vec<String> =
            ["lambda", "log_mean_h", "beta", "gamma", "phi", "tau1", "tau2", "delta1", "delta2", "sigma_u"]
                .iter()
                .map(|s| s.to_string())
                .collect();
        let n = self.n_states;
        v.extend((1..=n).map(|j| format!("xi_{j}")));
        for i in 1..=n {
            v.extend((1..=n).filter(|j| *j != i).map(|j| format!("pi_{i}{j}")));
        }
        if self.with_chi {
            v.extend((1..=n).map(|j| format!("chi_{j}")));
        }
        v
    }

    /// Whether coordinate `k` is a transition probability.
    pub fn is_probability(&self, k: usize) -> bool {
        (self.trans_offset()..self.chi_offset()).contains(&k)
    }

    /// Natural vector of a parameter set; `m` is recomputed from `ω`.
    pub fn natural_from(&self, p: &PhysicalParams, k: Option<&KernelParams>) -> Result<Vec<f64>> {
        if p.n_states() != self.n_states {
            return Err(Error::Dimension { expected: self.n_states, got: p.n_states() });
        }
        let m = p.stationary_log_mean_h()?;
        let mut v = vec![
            p.lambda, m, p.beta, p.gamma, p.phi, p.tau1, p.tau2, p.delta1, p.delta2, p.sigma_u,
        ];
        v.extend_from_slice(&p.xi);
        for i in 0..self.n_states {
            v.extend((0..self.n_states).filter(|j| *j != i).map(|j| p.trans.get(i, j)));
        }
        if self.with_chi {
            let chi = k.map(|k| k.chi().to_vec()).unwrap_or_else(|| vec![0.0; self.n_states]);
            if chi.len() != self.n_states {
                return Err(Error::Dimension { expected: self.n_states, got: chi.len() });
            }
            v.extend(chi);
        }
        Ok(v)
    }

    /// Builds parameters from a natural vector and the fixed daily rate.
    pub fn params_from(&self, v: &[f64], r: f64) -> Result<(PhysicalParams, KernelParams)> {
        if v.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: v.len() });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("parameter vector"));
        }
        let n = self.n_states;
        let xi = v[N_SCALAR..N_SCALAR + n].to_vec();
        let mut rows = vec![vec![0.0; n]; n];
        let mut off = self.trans_offset();
        for (i, row) in rows.iter_mut().enumerate() {
            let mut s = 0.0;
            for (j, x) in row.iter_mut().enumerate() {
                if i != j {
                    *x = v[off];
                    s += v[off];
                    off += 1;
                }
            }
            row[i] = 1.0 - s;
        }
        let trans = TransitionMatrix::from_rows(rows)?;
        let (lambda, m, beta, gamma, phi) = (v[0], v[1], v[2], v[3], v[4]);
        let omega = omega_from_log_mean(m, beta, gamma, phi, &xi, &trans)?;
        let p = PhysicalParams {
            lambda,
            omega,
            beta,
            gamma,
            phi,
            tau1: v[5],
            tau2: v[6],
            delta1: v[7],
            delta2: v[8],
            sigma_u: v[9],
            xi,
            trans,
            r,
        };
        p.ensure_valid()?;
        let chi = if self.with_chi { v[self.chi_offset()..].to_vec() } else { vec![0.0; n] };
        Ok((p, KernelParams::pinned(lambda, chi)))
    }

    /// Natural → unconstrained: `atanh` of the persistence replaces `β`,
    /// `log σ_u`, and log-odds `ln(π_ij/π_ii)` for the transition rows.
    pub fn encode(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut u = v.to_vec();
        let rho = v[2] + v[3] * v[4];
        if rho.abs() >= 1.0 || v[9] <= 0.0 {
            return Err(Error::InvalidParams("start outside the admissible region".into()));
        }
        u[2] = rho.atanh();
        u[9] = v[9].ln();
        let n = self.n_states;
        let mut off = self.trans_offset();
        for _ in 0..n {
            let row = &v[off..off + n - 1];
            let diag = 1.0 - row.iter().sum::<f64>();
            if diag <= 0.0 || row.iter().any(|p| *p <= 0.0) {
                return Err(Error::InvalidParams("transition probabilities must be interior".into()));
            }
            for k in 0..n - 1 {
                u[off + k] = (row[k] / diag).ln();
            }
            off += n - 1;
        }
        Ok(u)
    }

    pub fn decode(&self, u: &[f64]) -> Vec<f64> {
        let mut v = u.to_vec();
        v[2] = u[2].tanh() - u[3] * u[4];
        v[9] = u[9].exp();
        let n = self.n_states;
        let mut off = self.trans_offset();
        for _ in 0..n {
            let a = &u[off..off + n - 1];
            let mx = a.iter().fold(0.0f64, |m, x| m.max(*x));
            let denom = (-mx).exp() + a.iter().map(|x| (x - mx).exp()).sum::<f64>();
            for k in 0..n - 1 {
                v[off + k] = (a[k] - mx).exp() / denom;
            }
            off += n - 1;
        }
        v
    }

    /// Initial simplex scale per unconstrained coordinate.
    pub fn search_scale(&self) -> Vec<f64> {
        let mut s = vec![0.02, 0.2, 0.3, 0.05, 0.1, 0.03, 0.02, 0.03, 0.03, 0.1];
        s.extend(std::iter::repeat(0.2).take(self.n_states));
        s.extend(std::iter::repeat(0.7).take(self.n_trans()));
        if self.with_chi {
            s.extend(std::iter::repeat(0.2).take(self.n_states));
        }
        s
    }

    /// Reorders states so that `ξ` is ascending. Returns the permutation
    /// (`perm[new] = old`).
    pub fn relabel(&self, v: &mut [f64]) -> Vec<usize> {
        let n = self.n_states;
        let xo = self.xi_offset();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by(|a, b| v[xo + a].total_cmp(&v[xo + b]));
        if perm.iter().enumerate().all(|(i, p)| i == *p) {
            return perm;
        }
        let old = v.to_vec();
        let full = |i: usize, j: usize| -> f64 {
            if i == j {
                let row_start = self.trans_offset() + i * (n - 1);
                1.0 - old[row_start..row_start + n - 1].iter().sum::<f64>()
            } else {
                let k = if j < i { j } else { j - 1 };
                old[self.trans_offset() + i * (n - 1) + k]
            }
        };
        for (new, &o) in perm.iter().enumerate() {
            v[xo + new] = old[xo + o];
            if self.with_chi {
                v[self.chi_offset() + new] = old[self.chi_offset() + o];
            }
        }
        let mut off = self.trans_offset();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    v[off] = full(perm[i], perm[j]);
                    off += 1;
                }
            }
        }
        perm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::reference_msrg;

    #[test]
    fn natural_round_trip() {
        let (p, k) = reference_msrg();
        let lay = ParamLayout::new(2, true);
        let v = lay.natural_from(&p, Some(&k)).unwrap();
        assert_eq!(v.len(), lay.dim());
        assert_eq!(lay.names().len(), lay.dim());
        let (p2, k2) = lay.params_from(&v, p.r).unwrap();
        assert!((p2.omega - p.omega).abs() < 1e-12);
        assert!((p2.trans.get(0, 0) - 0.9996).abs() < 1e-15);
        assert_eq!(k2.chi(), k.chi());
        let u = lay.encode(&v).unwrap();
        let back = lay.decode(&u);
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn three_state_round_trip_and_relabel() {
        let lay = ParamLayout::new(3, true);
        let mut v = vec![0.03, -9.0, 0.8, 0.1, 1.0, -0.1, 0.02, -0.1, 0.1, 0.5];
        v.extend([0.2, -0.5, 0.0]);
        v.extend([0.01, 0.02, 0.03, 0.04, 0.05, 0.06]);
        v.extend([1.0, 2.0, 3.0]);
        let back = lay.decode(&lay.encode(&v).unwrap());
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
        let (p0, _) = lay.params_from(&v, 0.0).unwrap();
        let mut w = v.clone();
        let perm = lay.relabel(&mut w);
        assert_eq!(perm, vec![1, 2, 0]);
        let (p1, k1) = lay.params_from(&w, 0.0).unwrap();
        assert_eq!(p1.xi, vec![-0.5, 0.0, 0.2]);
        assert_eq!(k1.chi(), &[2.0, 3.0, 1.0]);
        for i in 0..3 {
            for j in 0..3 {
                assert!((p1.trans.get(i, j) - p0.trans.get(perm[i], perm[j])).abs() < 1e-15);
            }
        }
        assert!((p1.omega - p0.omega).abs() < 1e-12);
    }
}
