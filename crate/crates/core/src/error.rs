//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by all modules in this crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix row that must be normalizable has norm below 1e-12.
    #[error("row {0} has near-zero norm and cannot be normalized")]
    ZeroRow(usize),

    /// A matrix contains NaN or infinite entries.
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// A matrix with zero rows or columns where at least one is required.
    #[error("matrix must have at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },

    /// A Gram matrix that is not symmetric within tolerance.
    #[error("matrix is not symmetric: max |K[i,j] - K[j,i]| = {max_dev:.3e}")]
    NotSymmetric { max_dev: f64 },

    /// A Gram matrix with an eigenvalue below the PSD slack (-1e-8).
    #[error("matrix is not positive semi-definite: min eigenvalue = {min_eig:.3e}")]
    NotPositiveSemiDefinite { min_eig: f64 },

    /// The iterative SVD/eigen backend failed to converge.
    #[error("singular value decomposition did not converge")]
    ConvergenceFailure,

    /// Gram factorization requested into fewer dimensions than the numerical rank.
    #[error("numerical rank {rank} exceeds the requested target dimension {target_dim}")]
    RankExceedsDim { rank: usize, target_dim: usize },

    /// Operands whose shapes are incompatible for the requested operation.
    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    /// CKA is undefined when either Gram matrix is (numerically) zero.
    #[error("CKA undefined: tr(K*K) below 1e-24 for one argument")]
    ZeroGram,

    /// The nuclear-norm gradient is undefined near a rank-deficient cross matrix.
    #[error("nuclear-norm gradient near-singular: min singular value = {sigma_min:.3e}")]
    NearSingular { sigma_min: f64 },

    /// A theorem verification was invoked with inputs violating its premise.
    #[error("theorem premise violated: {0}")]
    PremiseViolated(String),

    /// Invalid configuration value.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Matrix text format parse failure.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim_mismatch(context: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            context: context.into(),
        }
    }
}
