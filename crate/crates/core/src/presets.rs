//! Reference parameter sets used by tests, examples and the CLI fixtures.

use crate::params::{omega_from_log_mean, PhysicalParams, TransitionMatrix};
use crate::risk_neutral::KernelParams;

/// Reported `log E(h)` for the two-state fit. Used here as `E[log h]`.
pub const REFERENCE_LOG_MEAN_H: f64 = -9.3672;

/// Daily risk-free rate attached to the reference set.
pub const REFERENCE_DAILY_RATE: f64 = 0.0001;

/// Two-state reference estimates (state 0 = Low, state 1 = High).
pub fn reference_msrg() -> (PhysicalParams, KernelParams) {
    let beta = 0.8435;
    let gamma = 0.1278;
    let phi = 0.9930;
    let xi = vec![-0.8767, -0.7788];
    let trans = TransitionMatrix::two_state(0.9996, 0.9948);
    let omega = omega_from_log_mean(REFERENCE_LOG_MEAN_H, beta, gamma, phi, &xi, &trans)
        .expect("reference chain is ergodic");
    let lambda = 0.0354;
    let p = PhysicalParams {
        lambda,
        omega,
        beta,
        gamma,
        phi,
        tau1: -0.1520,
        tau2: -0.0080,
        delta1: -0.1733,
        delta2: 0.1548,
        sigma_u: 0.6306,
        xi,
        trans,
        r: REFERENCE_DAILY_RATE,
    };
    let k = KernelParams::pinned(lambda, vec![-0.0052, 0.4586]);
    (p, k)
}

/// Single-state restriction of the reference set.
pub fn reference_rg() -> (PhysicalParams, KernelParams) {
    let (mut p, k) = reference_msrg();
    let pi = p.trans.stationary_distribution().expect("ergodic");
    let xi = pi.mean(&p.xi);
    let chi = pi.mean(k.chi());
    p.xi = vec![xi];
    p.trans = TransitionMatrix::identity(1);
    p.omega = omega_from_log_mean(REFERENCE_LOG_MEAN_H, p.beta, p.gamma, p.phi, &p.xi, &p.trans)
        .expect("single state");
    let k = KernelParams::pinned(p.lambda, vec![chi]);
    (p, k)
}
