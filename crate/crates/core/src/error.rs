use thiserror::Error;

/// Errors raised by the model, filter, moment engine, pricer and estimator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("state index {index} out of range for {n} states")]
    StateIndex { index: usize, n: usize },

    #[error("invalid state distribution: {0}")]
    InvalidDistribution(String),

    #[error("stationary distribution is not unique")]
    AmbiguousStationary,

    #[error("shock MGF outside its domain: theta*c2 = {0} (must be < 1/2)")]
    MgfDomain(f64),

    #[error("persistence is one; the long-run level is undefined")]
    UnitRoot,

    #[error("observation likelihood underflowed at step {0}")]
    Underflow(usize),

    #[error("non-positive variance: {0}")]
    NonPositiveVariance(f64),

    #[error("computation budget exceeded: {0}")]
    Budget(String),

    #[error("invalid option quote: {0}")]
    InvalidQuote(String),

    #[error("price {price} outside no-arbitrage bounds [{lower}, {upper}]")]
    ArbitrageBounds { price: f64, lower: f64, upper: f64 },

    #[error("unsupported Hermite order {0}")]
    HermiteOrder(u32),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("estimation failed: {0}")]
    Estimation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
