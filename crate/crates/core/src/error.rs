use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not positive definite: pivot {pivot:e} at step {step}")]
    NotPositiveDefinite { step: usize, pivot: f64 },

    #[error("loss of positive definiteness at CG iteration {iteration}: p*Wp = {curvature:e}")]
    LossOfDefiniteness { iteration: usize, curvature: f64 },

    #[error("insufficient moments: need {needed}, have {available}")]
    InsufficientMoments { needed: usize, available: usize },

    #[error("insufficient support / not a moment sequence: Hankel determinant of order {order} is not positive")]
    NotAMomentSequence { order: usize },

    #[error("index {index} out of range for size {size}")]
    OutOfRange { index: usize, size: usize },

    #[error("point {0} lies on the support of the measure")]
    OnSupport(String),

    #[error("degenerate sample: {0}")]
    Degenerate(String),

    #[error("estimated cost {estimated:.3e} flops exceeds budget {budget:.3e}; use chi-model mode for large sizes")]
    BudgetExceeded { estimated: f64, budget: f64 },

    #[error("trial {trial} failed: {source}")]
    TrialFailed {
        trial: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by bad input rather than by a failing computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::OutOfRange { .. }
                | Error::BudgetExceeded { .. }
                | Error::InsufficientMoments { .. }
                | Error::Parse(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
