use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("retraction undefined at this point (rank-deficient matrix, column {column})")]
    RetractionUndefined { column: usize },

    #[error("G not positive definite (smallest eigenvalue {min_eigenvalue:e}); increase ridge or check rank(X)")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("requested rank exceeds numerically identifiable rank: eigenvalue {index} is {value:e}")]
    RankNotIdentifiable { index: usize, value: f64 },

    #[error("divergence detected at iteration {iteration} (check rho, lambda scaling)")]
    Divergence { iteration: usize },

    #[error("all {cells} grid cells failed; first failure: {first}")]
    AllCellsFailed { cells: usize, first: String },

    #[error("all {replicates} replicates failed; first failure: {first}")]
    AllReplicatesFailed { replicates: usize, first: String },
}

impl Error {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Dimension {
            op,
            detail: detail.into(),
        }
    }

    /// True for failures caused by the numbers rather than by the inputs'
    /// shapes or argument ranges.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::RetractionUndefined { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::RankNotIdentifiable { .. }
                | Error::Divergence { .. }
                | Error::AllCellsFailed { .. }
                | Error::AllReplicatesFailed { .. }
        )
    }
}
