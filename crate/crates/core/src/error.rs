use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised while building networks or running any of the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("network must contain at least one bank")]
    Empty,

    #[error("dimension mismatch: {what} has size {got}, expected {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{field} contains a non-finite value at {index}")]
    NonFinite { field: &'static str, index: String },

    #[error("{field} contains a negative value {value} at {index}")]
    Negative {
        field: &'static str,
        index: String,
        value: f64,
    },

    #[error("bank {bank} has a liability of {value} towards itself; the diagonal of the liability matrix must be zero")]
    SelfLiability { bank: usize, value: f64 },

    #[error("holdings row {row} sums to {sum}, which exceeds 1")]
    HoldingsRowSum { row: usize, sum: f64 },

    #[error("I - Θ' is singular (smallest LU pivot {pivot:e}); 1 must not be an eigenvalue of the holdings matrix")]
    SingularHoldings { pivot: f64 },

    #[error("parameter {name} = {value} lies outside [0, 1]")]
    ParameterRange { name: &'static str, value: f64 },

    #[error("singular linear system in {context} (smallest LU pivot {pivot:e})")]
    Singular { context: &'static str, pivot: f64 },

    #[error("{context} did not converge within {iterations} iterations")]
    NonConvergence {
        context: &'static str,
        iterations: usize,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("internal assertion failed: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by invalid network data rather than by a solver.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Empty
                | Error::Dimension { .. }
                | Error::NonFinite { .. }
                | Error::Negative { .. }
                | Error::SelfLiability { .. }
                | Error::HoldingsRowSum { .. }
                | Error::SingularHoldings { .. }
                | Error::ParameterRange { .. }
        )
    }
}
