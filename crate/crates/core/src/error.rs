use thiserror::Error;

/// Errors raised by model construction and evaluation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("q must be at least 2, got {0}")]
    InvalidSpinCount(i64),

    #[error("{name} must be finite, got {value}")]
    NonFinite { name: &'static str, value: f64 },

    #[error("beta must be positive and finite, got {0}")]
    InvalidBeta(f64),

    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),

    #[error("spin {spin} outside 1..={q}")]
    SpinOutOfRange { spin: u32, q: u32 },

    #[error("periodic chain needs at least 2 sites, got {0}")]
    ChainTooShort(usize),

    #[error("chain length must be at least {min}, got {n}")]
    InvalidChainLength { n: usize, min: usize },

    #[error(
        "bond exponent |h + J*beta| = {exponent} exceeds {limit}; dense entries would overflow, use the log-domain routes"
    )]
    Overflow { exponent: f64, limit: f64 },

    #[error("power iteration did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),

    #[error("enumeration of {configs} configurations exceeds the cap of {cap}")]
    EnumerationCap { configs: f64, cap: u64 },

    #[error("finite-difference step {step} too large: {param} - step must stay positive (param = {value})")]
    StepTooLarge {
        param: &'static str,
        value: f64,
        step: f64,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid grid point {axis} = {value}: {reason}")]
    InvalidGridPoint {
        axis: &'static str,
        value: f64,
        reason: String,
    },

    #[error("q list must be strictly increasing with every entry at least 2")]
    InvalidQList,

    #[error("table has no rows")]
    EmptyTable,

    #[error("peak search needs a one-dimensional table")]
    NotOneDimensional,
}

pub type Result<T> = std::result::Result<T, Error>;
