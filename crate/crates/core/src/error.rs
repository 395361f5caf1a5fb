use thiserror::Error;

use crate::beamforming::PrecoderSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    /// The iterative precoder ran out of iterations. The last iterate is a
    /// valid (power-feasible, SINR-balanced) solution, only not certified optimal.
    #[error("max-min precoder did not converge after {iterations} iterations")]
    Convergence {
        iterations: usize,
        last: Box<PrecoderSolution>,
    },

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
