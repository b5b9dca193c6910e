mod common;

use common::{batch_mean_se, rg_path};
use msrg_core::model::{replay, simulate, step};
use msrg_core::presets::{reference_msrg, reference_rg};
use msrg_core::{validate, PhysicalParams, StateDistribution, TransitionMatrix, Violation};
use proptest::prelude::*;

#[test]
fn single_state_is_realized_garch() {
    let (p, _) = reference_rg();
    let sim = simulate(&p, 500, 42, -9.3, &StateDistribution::uniform(1)).unwrap();
    let (h, r, x) = rg_path(&p, p.xi[0], -9.3, &sim.z, &sim.u);
    assert_eq!(sim.log_h, h);
    // The library takes √h as exp(log h / 2); allow for that rounding.
    for (a, b) in sim.returns.iter().zip(&r) {
        assert!((a - b).abs() <= 1e-15 * b.abs().max(1e-3), "{a} vs {b}");
    }
    assert_eq!(sim.log_x, x);
    assert!(sim.states.iter().all(|&s| s == 0));
}

#[test]
fn replay_reproduces_simulation() {
    let (p, _) = reference_msrg();
    let pi = p.trans.stationary_distribution().unwrap();
    let sim = simulate(&p, 300, 7, -9.2, &pi).unwrap();
    let again = replay(&p, -9.2, &sim.states, &sim.z, &sim.u).unwrap();
    assert_eq!(sim, again);
    assert_eq!(simulate(&p, 300, 7, -9.2, &pi).unwrap(), sim);
    assert_ne!(simulate(&p, 300, 8, -9.2, &pi).unwrap(), sim);
}

#[test]
fn step_examples() {
    let (mut p, _) = reference_msrg();
    let t = step(&p, 1, -9.0, 0.0, 0.0).unwrap();
    let lx = p.xi[1] + p.phi * -9.0 - p.delta2;
    assert!((t.log_x - lx).abs() < 1e-15);
    assert!((t.log_h_next - (p.omega + p.beta * -9.0 + p.gamma * lx - p.tau2)).abs() < 1e-14);
    assert!(step(&p, 2, -9.0, 0.0, 0.0).is_err());
    assert!(step(&p, 0, f64::NAN, 0.0, 0.0).is_err());
    p.sigma_u = -1.0;
    assert!(!validate(&p).is_empty());
}

#[test]
fn reference_persistence_and_stationary_law() {
    let (p, _) = reference_msrg();
    assert!((p.persistence() - 0.9704).abs() < 5e-5);
    let pi = p.trans.stationary_distribution().unwrap();
    let next = p.trans.propagate(pi.probs());
    let gap = next.iter().zip(pi.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-12);
    assert!((pi.probs()[0] - 0.0052 / 0.0056).abs() < 1e-12);
}

#[test]
fn invalid_parameters_reported() {
    let (mut p, _) = reference_msrg();
    p.beta = 1.0;
    assert!(!validate(&p).is_empty());
    let (mut q, _) = reference_msrg();
    q.trans = TransitionMatrix::from_rows(vec![vec![0.5, 0.6], vec![0.5, 0.5]]).unwrap();
    assert!(validate(&q).iter().any(|v| matches!(v, Violation::RowSum { row: 0, .. })));
    q.trans = TransitionMatrix::from_rows(vec![vec![1.2, -0.2], vec![0.5, 0.5]]).unwrap();
    assert!(validate(&q).iter().any(|v| matches!(v, Violation::EntryOutOfRange { row: 0, .. })));
    assert!(TransitionMatrix::from_rows(vec![vec![1.0], vec![0.5, 0.5]]).is_err());
    assert!(StateDistribution::new(vec![0.5, 0.6]).is_err());
}

/// Under an absorbing chain the regime never changes, so the state-`j`
/// sample mean of log h estimates its long-run level.
#[test]
fn log_variance_reverts_to_state_level() {
    let (mut p, _) = reference_msrg();
    p.trans = TransitionMatrix::identity(2);
    for j in 0..2 {
        let target = p.long_run_log_variance(j).unwrap();
        let init = StateDistribution::degenerate(2, j);
        let sim = simulate(&p, 200_000, 100 + j as u64, target, &init).unwrap();
        let (m, se) = batch_mean_se(&sim.log_h, 50);
        assert!((m - target).abs() < 3.0 * se, "state {j}: {m} vs {target} ± {se}");
    }
}

#[test]
fn state_frequencies_follow_chain() {
    let (mut p, _) = reference_msrg();
    p.trans = TransitionMatrix::two_state(0.9, 0.7);
    let pi = p.trans.stationary_distribution().unwrap();
    let sim = simulate(&p, 200_000, 3, -9.3, &pi).unwrap();
    let mut counts = [[0.0; 2]; 2];
    for w in sim.states.windows(2) {
        counts[w[0]][w[1]] += 1.0;
    }
    for i in 0..2 {
        let n = counts[i][0] + counts[i][1];
        let phat = counts[i][i] / n;
        let pii = p.trans.get(i, i);
        let se = (pii * (1.0 - pii) / n).sqrt();
        assert!((phat - pii).abs() < 4.0 * se);
    }
}

fn params_strategy() -> impl Strategy<Value = PhysicalParams> {
    (0.5f64..0.9, 0.05f64..0.2, 0.8f64..1.0, 0.9f64..0.9999, 0.9f64..0.9999, 0.3f64..0.9).prop_map(
        |(beta, gamma, phi, p00, p11, sigma_u)| {
            let (mut p, _) = reference_msrg();
            p.beta = beta;
            p.gamma = gamma;
            p.phi = phi;
            p.sigma_u = sigma_u;
            p.trans = TransitionMatrix::two_state(p00, p11);
            p
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stationary_law_is_invariant(p in params_strategy()) {
        let pi = p.trans.stationary_distribution().unwrap();
        let next = p.trans.propagate(pi.probs());
        for (a, b) in next.iter().zip(pi.probs()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn paths_are_finite(p in params_strategy(), seed in 0u64..1000) {
        if p.persistence() < 1.0 {
            let pi = p.trans.stationary_distribution().unwrap();
            let sim = simulate(&p, 200, seed, p.log_mean_h(&pi).unwrap(), &pi).unwrap();
            prop_assert!(sim.log_h.iter().chain(&sim.returns).chain(&sim.log_x).all(|v| v.is_finite()));
        }
    }
}
