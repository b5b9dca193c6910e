//! Sums of expectations over ordered date tuples.
//!
//! With `A = Σ_i h_i` and `B = Σ_i √h_i z_i`, every `E[A^p B^q]` (p+q ≤ 4)
//! splits into sums over `t_1 < … < t_k ≤ T` of monomials
//! `Π_l h_{t_l}^{a2_l/2} z_{t_l}^{r_l}`. The table below lists those index
//! patterns with their multiplicities `p! q! / Π(cA! cB!)`; patterns whose
//! last factor carries an odd power of `z` vanish and are omitted. A unit test
//! re-derives the table by enumeration.

use super::shock::zr_mgf_unchecked;
use super::MomentEngine;
use crate::error::{Error, Result};
use crate::numeric::KahanSum;

/// Largest number of regimes the moment engine supports.
pub const MAXN: usize = 8;
type V = [f64; MAXN];

/// Identifies one of the expectation sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum STermId {
    /// `E A`
    A,
    /// `E A²`
    D1,
    /// `E B²`
    D2,
    /// `E AB`
    D3,
    /// `E A³`
    T1,
    /// `E B³`
    T2,
    /// `E A²B`
    T3,
    /// `E AB²`
    T4,
    /// `E A⁴`
    Q1,
    /// `E B⁴`
    Q2,
    /// `E A³B`
    Q3,
    /// `E A²B²`
    Q4,
    /// `E AB³`
    Q5,
}

impl STermId {
    pub const ALL: [STermId; 13] = [
        STermId::A,
        STermId::D1,
        STermId::D2,
        STermId::D3,
        STermId::T1,
        STermId::T2,
        STermId::T3,
        STermId::T4,
        STermId::Q1,
        STermId::Q2,
        STermId::Q3,
        STermId::Q4,
        STermId::Q5,
    ];

    /// Powers `(p, q)` of `A` and `B`.
    pub fn powers(self) -> (u32, u32) {
        match self {
            STermId::A => (1, 0),
            STermId::D1 => (2, 0),
            STermId::D2 => (0, 2),
            STermId::D3 => (1, 1),
            STermId::T1 => (3, 0),
            STermId::T2 => (0, 3),
            STermId::T3 => (2, 1),
            STermId::T4 => (1, 2),
            STermId::Q1 => (4, 0),
            STermId::Q2 => (0, 4),
            STermId::Q3 => (3, 1),
            STermId::Q4 => (2, 2),
            STermId::Q5 => (1, 3),
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// One ordered pattern: factors `(2 × h-power, z-power)` at increasing dates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternTerm {
    pub mult: u32,
    pub factors: &'static [(u32, u32)],
}

const fn pt(mult: u32, factors: &'static [(u32, u32)]) -> PatternTerm {
    PatternTerm { mult, factors }
}

pub static S_TERM_PATTERNS: [(STermId, &[PatternTerm]); 13] = [
    (STermId::A, &[pt(1, &[(2, 0)])]),
    (STermId::D1, &[pt(1, &[(4, 0)]), pt(2, &[(2, 0), (2, 0)])]),
    (STermId::D2, &[pt(1, &[(2, 2)])]),
    (STermId::D3, &[pt(1, &[(1, 1), (2, 0)])]),
    (
        STermId::T1,
        &[
            pt(1, &[(6, 0)]),
            pt(3, &[(2, 0), (4, 0)]),
            pt(3, &[(4, 0), (2, 0)]),
            pt(6, &[(2, 0), (2, 0), (2, 0)]),
        ],
    ),
    (STermId::T2, &[pt(3, &[(1, 1), (2, 2)])]),
    (
        STermId::T3,
        &[
            pt(1, &[(1, 1), (4, 0)]),
            pt(2, &[(3, 1), (2, 0)]),
            pt(2, &[(1, 1), (2, 0), (2, 0)]),
            pt(2, &[(2, 0), (1, 1), (2, 0)]),
        ],
    ),
    (
        STermId::T4,
        &[
            pt(1, &[(4, 2)]),
            pt(1, &[(2, 0), (2, 2)]),
            pt(1, &[(2, 2), (2, 0)]),
            pt(2, &[(1, 1), (1, 1), (2, 0)]),
        ],
    ),
    (
        STermId::Q1,
        &[
            pt(1, &[(8, 0)]),
            pt(4, &[(2, 0), (6, 0)]),
            pt(6, &[(4, 0), (4, 0)]),
            pt(4, &[(6, 0), (2, 0)]),
            pt(12, &[(2, 0), (2, 0), (4, 0)]),
            pt(12, &[(2, 0), (4, 0), (2, 0)]),
            pt(12, &[(4, 0), (2, 0), (2, 0)]),
            pt(24, &[(2, 0), (2, 0), (2, 0), (2, 0)]),
        ],
    ),
    (
        STermId::Q2,
        &[
            pt(1, &[(4, 4)]),
            pt(6, &[(2, 2), (2, 2)]),
            pt(12, &[(1, 1), (1, 1), (2, 2)]),
        ],
    ),
    (
        STermId::Q3,
        &[
            pt(1, &[(1, 1), (6, 0)]),
            pt(3, &[(3, 1), (4, 0)]),
            pt(3, &[(5, 1), (2, 0)]),
            pt(3, &[(1, 1), (2, 0), (4, 0)]),
            pt(3, &[(1, 1), (4, 0), (2, 0)]),
            pt(3, &[(2, 0), (1, 1), (4, 0)]),
            pt(6, &[(2, 0), (3, 1), (2, 0)]),
            pt(6, &[(3, 1), (2, 0), (2, 0)]),
            pt(3, &[(4, 0), (1, 1), (2, 0)]),
            pt(6, &[(1, 1), (2, 0), (2, 0), (2, 0)]),
            pt(6, &[(2, 0), (1, 1), (2, 0), (2, 0)]),
            pt(6, &[(2, 0), (2, 0), (1, 1), (2, 0)]),
        ],
    ),
    (
        STermId::Q4,
        &[
            pt(1, &[(6, 2)]),
            pt(2, &[(2, 0), (4, 2)]),
            pt(1, &[(2, 2), (4, 0)]),
            pt(1, &[(4, 0), (2, 2)]),
            pt(2, &[(4, 2), (2, 0)]),
            pt(2, &[(1, 1), (1, 1), (4, 0)]),
            pt(4, &[(1, 1), (3, 1), (2, 0)]),
            pt(2, &[(2, 0), (2, 0), (2, 2)]),
            pt(2, &[(2, 0), (2, 2), (2, 0)]),
            pt(2, &[(2, 2), (2, 0), (2, 0)]),
            pt(4, &[(3, 1), (1, 1), (2, 0)]),
            pt(4, &[(1, 1), (1, 1), (2, 0), (2, 0)]),
            pt(4, &[(1, 1), (2, 0), (1, 1), (2, 0)]),
            pt(4, &[(2, 0), (1, 1), (1, 1), (2, 0)]),
        ],
    ),
    (
        STermId::Q5,
        &[
            pt(3, &[(1, 1), (4, 2)]),
            pt(3, &[(3, 1), (2, 2)]),
            pt(1, &[(3, 3), (2, 0)]),
            pt(3, &[(1, 1), (2, 0), (2, 2)]),
            pt(3, &[(1, 1), (2, 2), (2, 0)]),
            pt(3, &[(2, 0), (1, 1), (2, 2)]),
            pt(3, &[(2, 2), (1, 1), (2, 0)]),
            pt(6, &[(1, 1), (1, 1), (1, 1), (2, 0)]),
        ],
    ),
];

/// Values of every sum, per initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct STerms {
    values: Vec<Vec<f64>>,
}

impl STerms {
    pub fn get(&self, id: STermId) -> &[f64] {
        &self.values[id.index()]
    }

    /// Raw moments `E R_T^k` per initial state. With `R_T = Tr + X`,
    /// `X = −A/2 + B`, the binomial expansion gives
    /// `E X² = S_D1/4 + S_D2 − S_D3`,
    /// `E X³ = −S_T1/8 + S_T2 + 3S_T3/4 − 3S_T4/2`,
    /// `E X⁴ = S_Q1/16 + S_Q2 − S_Q3/2 + 3S_Q4/2 − 2S_Q5`.
    pub fn raw_moments(&self, r: f64, horizon: usize) -> Vec<[f64; 4]> {
        let n = self.values[0].len();
        let tr = horizon as f64 * r;
        (0..n)
            .map(|s| {
                let v = |id: STermId| self.values[id.index()][s];
                let x1 = -0.5 * v(STermId::A);
                let x2 = 0.25 * v(STermId::D1) + v(STermId::D2) - v(STermId::D3);
                let x3 = -0.125 * v(STermId::T1) + v(STermId::T2) + 0.75 * v(STermId::T3)
                    - 1.5 * v(STermId::T4);
                let x4 = 0.0625 * v(STermId::Q1) + v(STermId::Q2) - 0.5 * v(STermId::Q3)
                    + 1.5 * v(STermId::Q4)
                    - 2.0 * v(STermId::Q5);
                [
                    tr + x1,
                    tr * tr + 2.0 * tr * x1 + x2,
                    tr.powi(3) + 3.0 * tr * tr * x1 + 3.0 * tr * x2 + x3,
                    tr.powi(4) + 4.0 * tr.powi(3) * x1 + 6.0 * tr * tr * x2 + 4.0 * tr * x3 + x4,
                ]
            })
            .collect()
    }
}

impl MomentEngine {
    fn check_fast_path(&self) -> Result<()> {
        if self.n > MAXN {
            return Err(Error::Budget(format!("moment engine supports at most {MAXN} regimes")));
        }
        // Chain exponents stay in [0, 4] (or [-4, 4] when ρ < 0).
        let worst = if self.rho >= 0.0 { 4.0 * self.c2.max(0.0) } else { 4.0 * self.c2.abs() };
        if !(worst < 0.5) {
            return Err(Error::MgfDomain(worst));
        }
        Ok(())
    }

    #[inline]
    fn g_fast(&self, x: f64) -> f64 {
        let d = 1.0 - 2.0 * x * self.c2;
        -0.5 * d.ln() - x * self.c2 + x * x * self.c1 * self.c1 / (2.0 * d)
            + 0.5 * self.gs * self.gs * x * x
    }

    #[inline]
    fn zr_fast(&self, r: u32, x: f64) -> f64 {
        zr_mgf_unchecked(r, x, self.c1, self.c2, self.gs, 1.0 - 2.0 * x * self.c2)
    }

    /// `out = Π (exp(shift + xζ) ∘ w)`.
    #[inline]
    fn transfer(&self, x: f64, shift: f64, w: &V, out: &mut V) {
        let n = self.n;
        let mut y = [0.0; MAXN];
        for j in 0..n {
            y[j] = (shift + x * self.zeta[j]).exp() * w[j];
        }
        for i in 0..n {
            let row = &self.trans[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * y[j];
            }
            out[i] = acc;
        }
    }

    /// Adds `c Σ_{t=1}^{len} Ψ_t(m, log w)` into `acc`.
    fn outer_sum(&self, m: f64, w: &V, c: f64, len: usize, ln_h1: f64, acc: &mut [KahanSum]) {
        let n = self.n;
        let mut u = [0.0; MAXN];
        let h = (m * ln_h1).exp();
        for s in 0..n {
            u[s] = h * w[s];
        }
        let mut x = m;
        let mut next = [0.0; MAXN];
        for t in 1..=len {
            for s in 0..n {
                acc[s].add(c * u[s]);
            }
            if t < len {
                self.transfer(x, self.g_fast(x) + x * (self.rho - 1.0) * ln_h1, &u, &mut next);
                u = next;
                x *= self.rho;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        pat: &[(u32, u32)],
        remaining: usize,
        m: f64,
        w: &V,
        c: f64,
        span: usize,
        horizon: usize,
        ln_h1: f64,
        acc: &mut [KahanSum],
    ) {
        if remaining == 0 {
            self.outer_sum(m, w, c, horizon - span, ln_h1, acc);
            return;
        }
        let (a2, r) = pat[remaining - 1];
        let a = 0.5 * a2 as f64;
        // Leave room for the factors still to be placed before this one.
        let max_gap = horizon - 1 - span - (remaining - 1);
        let mut we = *w;
        let mut x = m;
        let mut wf = [0.0; MAXN];
        let mut tmp = [0.0; MAXN];
        for g in 1..=max_gap {
            let cz = self.zr_fast(r, x);
            if cz != 0.0 {
                self.transfer(x, 0.0, &we, &mut wf);
                self.descend(pat, remaining - 1, a + x * self.rho, &wf, c * cz, span + g, horizon, ln_h1, acc);
            }
            if g < max_gap {
                self.transfer(x, self.g_fast(x), &we, &mut tmp);
                we = tmp;
                x *= self.rho;
            }
        }
    }

    /// `Σ_{t_1<…<t_k≤T} E[Π_l h_{t_l}^{a2_l/2} z_{t_l}^{r_l}]` per initial state.
    pub fn pattern_sum(&self, factors: &[(u32, u32)], log_h1: f64, horizon: usize) -> Result<Vec<f64>> {
        self.check_fast_path()?;
        let k = factors.len();
        if k == 0 || horizon < k {
            return Ok(vec![0.0; self.n]);
        }
        let mut acc = vec![KahanSum::new(); self.n];
        let (a2, r) = factors[k - 1];
        let c = self.zr_fast(r, 0.0);
        if c != 0.0 {
            let mut w = [0.0; MAXN];
            w[..self.n].fill(1.0);
            self.descend(factors, k - 1, 0.5 * a2 as f64, &w, c, 0, horizon, log_h1, &mut acc);
        }
        Ok(acc.iter().map(|a| a.value()).collect())
    }

    /// All thirteen sums.
    pub fn s_terms(&self, log_h1: f64, horizon: usize) -> Result<STerms> {
        if horizon == 0 {
            return Err(Error::Empty("moment horizon"));
        }
        if horizon > super::MAX_HORIZON {
            return Err(Error::Budget(format!(
                "horizon {horizon} exceeds {}",
                super::MAX_HORIZON
            )));
        }
        self.check_fast_path()?;
        let mut values = Vec::with_capacity(13);
        for (id, patterns) in S_TERM_PATTERNS.iter() {
            debug_assert_eq!(id.index(), values.len());
            let mut tot = vec![KahanSum::new(); self.n];
            for p in patterns.iter() {
                let v = self.pattern_sum(p.factors, log_h1, horizon)?;
                for (t, x) in tot.iter_mut().zip(v) {
                    t.add(p.mult as f64 * x);
                }
            }
            values.push(tot.iter().map(|t| t.value()).collect());
        }
        Ok(STerms { values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet};

    type Pattern = Vec<(u32, u32)>;

    /// Enumerates ordered set partitions of `p` A-items and `q` B-items.
    fn enumerate(p: u32, q: u32) -> BTreeMap<Pattern, u32> {
        let k = (p + q) as usize;
        let mut seen = BTreeSet::new();
        let mut out = BTreeMap::new();
        let total = (k as u32).pow(k as u32);
        for code in 0..total {
            let mut ranks = Vec::with_capacity(k);
            let mut c = code;
            for _ in 0..k {
                ranks.push(c % k as u32);
                c /= k as u32;
            }
            let used: BTreeSet<u32> = ranks.iter().copied().collect();
            let compress: BTreeMap<u32, usize> = used.iter().enumerate().map(|(i, r)| (*r, i)).collect();
            let comp: Vec<usize> = ranks.iter().map(|r| compress[r]).collect();
            if !seen.insert(comp.clone()) {
                continue;
            }
            let mut pat = vec![(0u32, 0u32); used.len()];
            for (item, slot) in comp.iter().enumerate() {
                if (item as u32) < p {
                    pat[*slot].0 += 2;
                } else {
                    pat[*slot].0 += 1;
                    pat[*slot].1 += 1;
                }
            }
            if pat.last().unwrap().1 % 2 == 1 {
                continue;
            }
            *out.entry(pat).or_insert(0) += 1;
        }
        out
    }

    #[test]
    fn frozen_table_matches_enumeration() {
        for (id, patterns) in S_TERM_PATTERNS.iter() {
            let (p, q) = id.powers();
            let expected = enumerate(p, q);
            let mut frozen = BTreeMap::new();
            for t in patterns.iter() {
                assert!(frozen.insert(t.factors.to_vec(), t.mult).is_none(), "{id:?} duplicate");
            }
            assert_eq!(frozen, expected, "{id:?}");
        }
    }
}
