use thiserror::Error;

/// Errors raised by the bound computations, model builders and estimators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CrbError {
    #[error("matrix is not symmetric (max relative asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("{what} is not positive definite{}", fmt_min_eig(*.min_eigenvalue))]
    NotPositiveDefinite {
        what: String,
        min_eigenvalue: Option<f64>,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unknown block `{0}`")]
    UnknownBlock(String),

    #[error("block selection `{0}` leaves no parameters to eliminate; use the plain block")]
    EmptyComplement(String),

    #[error("invalid block order: {0}")]
    InvalidOrder(String),

    #[error("rank deficient: {0}")]
    RankDeficient(String),

    #[error("singular Jacobian: {0}")]
    SingularJacobian(String),

    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{discarded} of {trials} trials failed to converge (limit {limit})")]
    ConvergenceFailure {
        discarded: usize,
        trials: usize,
        limit: usize,
    },
}

fn fmt_min_eig(min: Option<f64>) -> String {
    match min {
        Some(e) => format!(" (smallest eigenvalue {e:.6e})"),
        None => String::new(),
    }
}

impl CrbError {
    /// True for failures caused by the numbers rather than by the inputs' shape.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            CrbError::NotSymmetric { .. }
                | CrbError::NotPositiveDefinite { .. }
                | CrbError::RankDeficient(_)
                | CrbError::SingularJacobian(_)
                | CrbError::ConvergenceFailure { .. }
        )
    }
}

pub type Result<T, E = CrbError> = std::result::Result<T, E>;
