use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("density is negative ({value:e}) at x = {x}")]
    NegativeDensity { x: f64, value: f64 },

    #[error("tail mass {mass:e} exceeds budget {budget:e}; widen the grid")]
    TailMass { mass: f64, budget: f64 },

    #[error("frequency window folds {fraction:e} of spectral energy; use more grid points")]
    Aliasing { fraction: f64 },

    #[error("density is not standardized (mean {mean:e}, variance {variance})")]
    NotStandardized { mean: f64, variance: f64 },

    #[error("{what} does not converge under window doubling (last values {values:?})")]
    Diverged { what: String, values: Vec<f64> },

    #[error("attraction condition fails at p = {p}: sigma^2 = {sigma2} <= 2pq = {two_pq}")]
    ConditionFailed { p: f64, sigma2: f64, two_pq: f64 },

    #[error("classification inconclusive: {0}")]
    Inconclusive(String),

    #[error("value at index {index} is not positive ({value})")]
    NonPositive { index: usize, value: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("cannot read grid density: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
