use thiserror::Error;

/// Errors raised by the library.
///
/// Validation problems in user input are reported through
/// [`ValidationReport`](crate::graph::ValidationReport) where the contract
/// treats them as data; the variants here are hard failures.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown {kind} id `{id}`")]
    UnknownId { kind: &'static str, id: String },

    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },

    #[error("invalid period cell: {0}")]
    InvalidCell(String),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error("invalid couplings: {0}")]
    InvalidCouplings(String),

    #[error("limit endpoints A_{i} and A_{j} coincide ({a_i} vs {a_j})")]
    DegenerateA { i: usize, j: usize, a_i: f64, a_j: f64 },

    #[error("limit matrix is not weighted-symmetric at ({i},{k}): defect {defect:e}")]
    SymmetryViolation { i: usize, k: usize, defect: f64 },

    #[error("root of the secular equation not bracketed on {interval}")]
    RootNotBracketed { interval: String },

    #[error("invalid gap targets: {0}")]
    InvalidTargets(String),

    #[error("radicand for beta_{j} is not positive ({value})")]
    NonpositiveRadicand { j: usize, value: f64 },

    #[error("invalid fiber parameters: {0}")]
    InvalidFiberSpec(String),

    #[error("mass matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("eigensolver did not converge at index {index} (residual {residual:e})")]
    EigensolverFailure { index: usize, residual: f64 },

    #[error("requested {requested} eigenvalues but the problem has dimension {dim}")]
    TooManyEigenvalues { requested: usize, dim: usize },

    #[error("computed Lambda_0 = {0} is not positive")]
    NonpositiveLambda0(f64),

    #[error("expected {expected} gaps below the window top at epsilon = {epsilon}, found {found}")]
    GapCountMismatch { expected: usize, found: usize, epsilon: f64 },

    #[error("invalid band scan request: {0}")]
    InvalidScan(String),

    #[error("calibration bracketing failed for component {k}: need {lower} < {target} < {upper}")]
    BracketingFailed { k: usize, lower: f64, target: f64, upper: f64 },

    #[error("calibration did not converge after {sweeps} sweeps (max residual {residual:e})")]
    NotConverged { sweeps: usize, residual: f64, alpha: Vec<f64> },

    #[error("invalid calibration box: {0}")]
    InvalidBox(String),

    #[error("parse error at `{path}`: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    /// True for errors caused by invalid input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UnknownId { .. }
                | Error::DuplicateId { .. }
                | Error::InvalidCell(_)
                | Error::InvalidDecomposition(_)
                | Error::InvalidCouplings(_)
                | Error::DegenerateA { .. }
                | Error::InvalidTargets(_)
                | Error::InvalidFiberSpec(_)
                | Error::TooManyEigenvalues { .. }
                | Error::InvalidScan(_)
                | Error::InvalidBox(_)
                | Error::Parse { .. }
        )
    }

    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownId { .. } => "unknown_id",
            Error::DuplicateId { .. } => "duplicate_id",
            Error::InvalidCell(_) => "invalid_cell",
            Error::InvalidDecomposition(_) => "invalid_decomposition",
            Error::InvalidCouplings(_) => "invalid_couplings",
            Error::DegenerateA { .. } => "degenerate_a",
            Error::SymmetryViolation { .. } => "symmetry_violation",
            Error::RootNotBracketed { .. } => "root_not_bracketed",
            Error::InvalidTargets(_) => "invalid_targets",
            Error::NonpositiveRadicand { .. } => "nonpositive_radicand",
            Error::InvalidFiberSpec(_) => "invalid_fiber_spec",
            Error::NotPositiveDefinite { .. } => "not_positive_definite",
            Error::EigensolverFailure { .. } => "eigensolver_failure",
            Error::TooManyEigenvalues { .. } => "too_many_eigenvalues",
            Error::NonpositiveLambda0(_) => "nonpositive_lambda0",
            Error::GapCountMismatch { .. } => "gap_count_mismatch",
            Error::InvalidScan(_) => "invalid_scan",
            Error::BracketingFailed { .. } => "bracketing_failed",
            Error::NotConverged { .. } => "not_converged",
            Error::InvalidBox(_) => "invalid_box",
            Error::Parse { .. } => "parse",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
