//! Markov-switching Realized GARCH: physical dynamics and filtering,
//! regime-dependent risk neutralization, closed-form conditional moments and
//! Edgeworth-expansion option pricing, with brute-force and Monte Carlo
//! oracles for each analytical piece.

pub mod error;
pub mod estimation;
pub mod filter;
pub mod hng;
pub mod model;
pub mod moments;
pub mod numeric;
pub mod panel;
pub mod params;
pub mod pricer;
pub mod quadrature;
pub mod presets;
pub mod risk_neutral;

pub use error::{Error, Result};
pub use params::{validate, PhysicalParams, StateDistribution, TransitionMatrix, Violation};
pub use risk_neutral::{to_q, KernelParams, QParams};
