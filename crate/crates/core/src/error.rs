use thiserror::Error;

/// Errors produced by the graph learning and classification pipeline.
#[derive(Debug, Error)]
pub enum DglError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: &'static str,
    },

    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("symmetric eigensolver failed to converge on a {size}x{size} matrix")]
    EigenNoConvergence { size: usize },

    #[error("degenerate graph: {0}")]
    DegenerateGraph(&'static str),

    #[error(
        "QP solver did not converge after {iterations} iterations (KKT residual {kkt_residual:e})"
    )]
    QpNoConvergence {
        iterations: usize,
        kkt_residual: f64,
        /// Best feasible iterate found before giving up.
        best_point: Vec<f64>,
        best_objective: f64,
    },

    #[error("learned spectrum violates the feasible cone at index {index} by {violation:e}")]
    InfeasibleSpectrum { index: usize, violation: f64 },

    #[error("singular linear system in {context} (condition estimate {condition_estimate:e})")]
    Singular {
        context: &'static str,
        condition_estimate: f64,
    },

    #[error("SVM dual did not converge after {passes} passes (max KKT violation {violation:e})")]
    DualNoConvergence { passes: usize, violation: f64 },

    #[error("no labeled samples available for training")]
    NoLabels,

    #[error("class {class} has {available} samples but {required} labeled samples are required")]
    InsufficientLabels {
        class: usize,
        available: usize,
        required: usize,
    },

    #[error("labeled samples must precede unlabeled samples (first violation at column {0})")]
    LabelOrder(usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset: {0}")]
    Empty(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = DglError> = std::result::Result<T, E>;
