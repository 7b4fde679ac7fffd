use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("dimension mismatch: expected alphabet size {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("capacity exceeded: {what} requires {required} items, budget is {budget}")]
    Capacity {
        what: &'static str,
        required: u128,
        budget: u128,
    },

    #[error("empty event: no type of size n = {n} satisfies the constraints")]
    EmptyEvent { n: u64 },

    #[error("infeasible constraint set (certificate: constraint {index}): {detail}")]
    Infeasible { index: usize, detail: String },

    #[error("infinite divergence: every member of the constraint set puts mass on symbols with zero probability")]
    InfiniteDivergence,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("solver did not converge after {iterations} iterations (gradient max-norm {gradient_norm:e})")]
    NotConverged {
        iterations: usize,
        gradient_norm: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
