use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("singular matrix: pivot {pivot:e} at index {index}")]
    SingularMatrix { index: usize, pivot: f64 },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("BadParams: {0}")]
    BadParams(String),

    #[error("rejection sampler exhausted after {draws} draws")]
    RejectionExhausted { draws: usize },

    #[error("operation requires quadratic local functions")]
    NotQuadratic,

    #[error("shifted Hessian is singular")]
    SingularShift,

    #[error("assumption violation on machine {machine} at round {round}: {detail}")]
    AssumptionViolation {
        machine: usize,
        round: usize,
        detail: String,
    },

    #[error("negative oracle coefficient (gamma={gamma}, nu={nu})")]
    NegativeCoefficient { gamma: f64, nu: f64 },

    #[error("machine {machine} exceeded {cap} local points in round {round}")]
    LocalBudgetExceeded {
        machine: usize,
        round: usize,
        cap: usize,
    },

    #[error("solver diverged at round {round}")]
    Diverged { round: usize },
}

impl Error {
    pub(crate) fn bad(msg: impl Into<String>) -> Self {
        Error::BadParams(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
