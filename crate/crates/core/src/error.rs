use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("family is not increasing: member {member} exceeds member {next} by {excess:e}")]
    NotIncreasing { member: usize, next: usize, excess: f64 },

    #[error("function takes a non-finite value on the validation sample")]
    Unbounded,

    #[error("function is negative ({value:e}) on the validation sample")]
    Negative { value: f64 },

    #[error("functional is not on the dual unit sphere (norm {norm})")]
    NotOnSphere { norm: f64 },

    #[error("oracle needs {size} tuples, over the configured budget of {budget}")]
    BudgetExceeded { size: usize, budget: usize },

    #[error("no (sigma, mu) pair satisfies the grid; best achievable C = {best_c}")]
    NoFeasibleSparsification { best_c: f64 },

    #[error("linear program infeasible ({violations} violating samples)")]
    LpInfeasible { violations: usize },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("functional is not block-constant at level {level}")]
    NotBlockConstant { level: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl Error {
    /// Errors caused by bad input, as opposed to a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidSpace(_)
                | Error::InvalidArgument(_)
                | Error::Parse { .. }
                | Error::NotIncreasing { .. }
                | Error::Negative { .. }
                | Error::NotOnSphere { .. }
                | Error::NotBlockConstant { .. }
                | Error::Unsupported(_)
        )
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
