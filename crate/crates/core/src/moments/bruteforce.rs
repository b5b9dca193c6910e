//! Oracle: `E[(Σ_i Y_i)^k]` with `Y_i = r − h_i/2 + √h_i z_i`, expanded over
//! every ordered index tuple. Each tuple's product is multiplied out into
//! monomials, and every monomial goes through the stepwise evaluator.

use super::{MomentEngine, MAX_BRUTEFORCE_HORIZON};
use crate::error::{Error, Result};
use crate::numeric::KahanSum;

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Terms of `Y^c` as `(coefficient, h-power, z-power)`.
fn power_terms(r: f64, c: u32) -> Vec<(f64, f64, u32)> {
    let mut out = Vec::new();
    for i in 0..=c {
        for j in 0..=(c - i) {
            let l = c - i - j;
            let coef = factorial(c) / (factorial(i) * factorial(j) * factorial(l))
                * r.powi(i as i32)
                * (-0.5f64).powi(j as i32);
            out.push((coef, j as f64 + 0.5 * l as f64, l));
        }
    }
    out
}

fn tuple_expectation(e: &MomentEngine, log_h1: f64, r: f64, tuple: &[usize]) -> Result<Vec<f64>> {
    let mut counts: Vec<(usize, u32)> = Vec::new();
    for &t in tuple {
        match counts.iter_mut().find(|(tt, _)| *tt == t) {
            Some(c) => c.1 += 1,
            None => counts.push((t, 1)),
        }
    }
    // Cartesian product of per-date expansions.
    let mut partial: Vec<(f64, Vec<(usize, f64, u32)>)> = vec![(1.0, Vec::new())];
    for (t, c) in counts {
        let terms = power_terms(r, c);
        let mut next = Vec::with_capacity(partial.len() * terms.len());
        for (coef, facs) in &partial {
            for (tc, a, z) in &terms {
                let mut f = facs.clone();
                f.push((t, *a, *z));
                next.push((coef * tc, f));
            }
        }
        partial = next;
    }
    let mut acc = vec![KahanSum::new(); e.n_states()];
    for (coef, facs) in partial {
        if coef == 0.0 {
            continue;
        }
        let v = e.monomial(log_h1, &facs)?;
        for (a, x) in acc.iter_mut().zip(v) {
            a.add(coef * x);
        }
    }
    Ok(acc.iter().map(|a| a.value()).collect())
}

pub(super) fn moments(e: &MomentEngine, log_h1: f64, horizon: usize) -> Result<Vec<[f64; 4]>> {
    if horizon == 0 {
        return Err(Error::Empty("moment horizon"));
    }
    if horizon > MAX_BRUTEFORCE_HORIZON {
        return Err(Error::Budget(format!(
            "brute force limited to T ≤ {MAX_BRUTEFORCE_HORIZON}, got {horizon}"
        )));
    }
    let n = e.n_states();
    let mut out = vec![[0.0; 4]; n];
    for k in 1..=4usize {
        let mut acc = vec![KahanSum::new(); n];
        let mut tuple = vec![1usize; k];
        loop {
            let v = tuple_expectation(e, log_h1, e.r, &tuple)?;
            for (a, x) in acc.iter_mut().zip(v) {
                a.add(x);
            }
            // odometer increment over [1, T]^k
            let mut pos = 0;
            while pos < k && tuple[pos] == horizon {
                tuple[pos] = 1;
                pos += 1;
            }
            if pos == k {
                break;
            }
            tuple[pos] += 1;
        }
        for (s, a) in acc.iter().enumerate() {
            out[s][k - 1] = a.value();
        }
    }
    Ok(out)
}
