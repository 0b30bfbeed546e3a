use thiserror::Error;

/// Errors produced by the solvers, simulators and document parsers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A malformed or inconsistent configuration / table document.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Adaptive quadrature ran out of refinement levels.
    #[error("quadrature did not converge: achieved relative tolerance {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    /// Value iteration ran out of iterations.
    #[error("value iteration did not converge after {iterations} iterations: sup-norm change {achieved:e}, requested {requested:e}")]
    NonConvergence {
        iterations: usize,
        achieved: f64,
        requested: f64,
    },

    /// A simulated trajectory exceeded the hard step cap without stopping.
    #[error("trajectory exceeded the step cap of {cap} slots")]
    StepCap { cap: u64 },

    /// Too many capped trials in a Monte Carlo batch.
    #[error("{capped} of {trials} trials hit the step cap")]
    TooManyCapped { capped: usize, trials: usize },

    /// The energy chain has no unique aperiodic recurrent class.
    #[error("irregular energy chain: {0}")]
    IrregularChain(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
