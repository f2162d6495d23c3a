use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid transition matrix: {0}")]
    InvalidSft(String),

    #[error("word is not allowed by the subshift: {0}")]
    InvalidWord(String),

    #[error("spanning set is empty for horizon {horizon} and radius {radius}")]
    EmptySpanningSet { horizon: usize, radius: f64 },

    /// A cycle of negative total weight; vertices listed in traversal order.
    #[error("negative cycle through {cycle:?} (total weight {weight})")]
    NegativeCycle { cycle: Vec<usize>, weight: f64 },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("step {step} exceeds max admissible step {max_step}")]
    StepTooLarge { step: f64, max_step: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    /// Minimizer search ran out of iterations; carries the best lift found.
    #[error("minimizer did not converge after {iterations} iterations (residual {residual:e})")]
    MinimizerNotConverged { iterations: usize, residual: f64, best: Vec<[f64; 2]> },

    #[error("value iteration drifts at rate {drift:e} per sweep; level is below critical")]
    BelowCritical { drift: f64 },

    #[error("radius {radius} is below grid resolution {resolution}")]
    RadiusTooSmall { radius: f64, resolution: f64 },

    #[error("points at distance {distance} exceed local product radius {limit}")]
    TooFar { distance: f64, limit: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("bisection bracket [{lo}, {hi}] failed")]
    Bracket { lo: f64, hi: f64 },
}
