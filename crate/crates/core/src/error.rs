use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LltError>;

#[derive(Debug, Error)]
pub enum LltError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("row {row}: expected {expected} samples, got {got}")]
    RowLength {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed artifact file: {0}")]
    Format(String),

    #[error("version mismatch: expected {expected}, found {found}")]
    Version { expected: String, found: String },

    #[error("checksum mismatch: expected {expected}, computed {computed}")]
    Checksum { expected: String, computed: String },

    #[error("coefficients not unit norm (norm = {norm})")]
    NotUnitNorm { norm: f64 },

    #[error("degenerate window")]
    DegenerateWindow,

    #[error("cannot fit law on empty class")]
    EmptyClass,

    #[error("rank-deficient: law ambiguous (smallest eigenvalue {lambda:e} has multiplicity {multiplicity})")]
    RankDeficient { lambda: f64, multiplicity: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("variance identity violated: law variance {variance:e} vs eigenvalue {lambda:e}")]
    VarianceIdentity { variance: f64, lambda: f64 },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("training data must contain two classes")]
    SingleClass,

    #[error("SMO did not converge: {violations} KKT violations remain after {iterations} iterations")]
    SmoNoConvergence { iterations: usize, violations: usize },

    #[error("training diverged (loss is not finite at epoch {epoch}); try a smaller learning rate")]
    Divergence { epoch: usize },

    #[error("length mismatch: {left} predictions vs {right} labels")]
    LengthMismatch { left: usize, right: usize },

    #[error("no beats to evaluate")]
    EmptyEvaluation,

    #[error("audit failure: {0}")]
    Audit(String),
}

impl LltError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LltError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        LltError::Parameter(msg.into())
    }
}
