use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user-supplied parameters (grid bounds, model parameters, tolerances).
    #[error("configuration error: {0}")]
    Config(String),

    /// A function value or derivative was not finite at the given argument.
    #[error("evaluation of {what} overflowed at t = {at}")]
    Evaluation { what: String, at: f64 },

    /// An exponent guard tripped while building a gauge-dependent matrix.
    #[error("{what}: exponent {exponent:.3e} at x = {at} exceeds the guard {limit}; shrink the domain")]
    Overflow {
        what: String,
        exponent: f64,
        at: f64,
        limit: f64,
    },

    #[error("similarity conditioning: |f(x_j) - f(x_k)| = {gap:.3e} exceeds {limit} between rows {row} and {col}")]
    Conditioning {
        gap: f64,
        limit: f64,
        row: usize,
        col: usize,
    },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("representation mismatch: {0}")]
    Representation(String),

    #[error("matrix is not Hermitian (max |M - M^T| = {asymmetry:.3e}, max |M| = {scale:.3e})")]
    NotHermitian { asymmetry: f64, scale: f64 },

    /// Eigensolver failure, with basic statistics of the offending matrix.
    #[error("eigensolver failed on {dim}x{dim} matrix (||M||_F = {frobenius:.3e}, finite = {finite}): {reason}")]
    Solver {
        dim: usize,
        frobenius: f64,
        finite: bool,
        reason: String,
    },

    #[error("verification report contains no executed checks")]
    EmptyReport,

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn is_solver(&self) -> bool {
        matches!(self, Error::Solver { .. })
    }
}
