use thiserror::Error;

/// Errors raised while validating inputs or walking a lattice.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("initial equity price must be positive, got {0}")]
    NonPositiveSpot(f64),
    #[error("{name} volatility must be positive, got {value}")]
    NonPositiveVolatility { name: &'static str, value: f64 },
    #[error("initial short rate must be positive, got {0}")]
    NonPositiveInitialRate(f64),
    #[error("mean-reversion speed must be positive, got {0}")]
    NonPositiveMeanReversion(f64),
    #[error("long-run rate level must be positive, got {0}")]
    NonPositiveLongRunRate(f64),
    #[error("parameter {0} is not finite")]
    NonFiniteParameter(&'static str),
    #[error("correlation must lie strictly inside (-1, 1), got {0}")]
    CorrelationOutOfRange(f64),
    #[error("strike must be positive, got {0}")]
    NonPositiveStrike(f64),
    #[error("maturity must be positive, got {0}")]
    NonPositiveMaturity(f64),
    #[error("number of time steps must be at least 1")]
    ZeroSteps,
    #[error("regime threshold must lie in (0, {upper}), got {value}")]
    ThetaStarOutOfRange { value: f64, upper: f64 },
    #[error("node ({i}, {index}) is outside a lattice with {steps} steps")]
    IndexOutOfRange {
        i: usize,
        index: usize,
        steps: usize,
    },
    #[error("transformed rate is exactly zero; the drift is singular there")]
    SingularDrift,
    #[error("branch values coincide at step {i}; the up-probability is undefined")]
    DegenerateBranch { i: usize },
    #[error("non-finite intermediate value at node ({i}, {j}, {k})")]
    NonFinite { i: usize, j: usize, k: usize },
    #[error("Monte Carlo pricing supports European exercise only")]
    AmericanNotSupported,
    #[error("Monte Carlo needs at least one path and one time step")]
    EmptySimulation,
}

pub type Result<T> = std::result::Result<T, Error>;
