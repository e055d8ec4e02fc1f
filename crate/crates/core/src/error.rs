//! Error type shared by all modules of the crate.

use num_complex::Complex;

/// Errors reported by model construction, assembly and the verification
/// operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix entry at ({row}, {col}) is not finite: {re} + {im}i")]
    NonFinite { row: usize, col: usize, re: f64, im: f64 },

    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyMatrix { rows: usize, cols: usize },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("matrix is not Hermitian: relative deviation {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("shift {shift} lies too close to the spectrum{} (min singular value {min_sv:.3e} <= threshold {threshold:.3e})", operator.map(|o| format!(" of the {o} operator")).unwrap_or_default())]
    NearSingularShift {
        operator: Option<&'static str>,
        shift: Complex<f64>,
        min_sv: f64,
        threshold: f64,
    },

    #[error("boundary block is numerically singular (min singular value {min_sv:.3e} <= threshold {threshold:.3e})")]
    SingularBoundaryBlock { min_sv: f64, threshold: f64 },

    #[error("Q({shift}) is numerically singular (min singular value {min_sv:.3e} <= threshold {threshold:.3e})")]
    SingularQ { shift: Complex<f64>, min_sv: f64, threshold: f64 },

    #[error("adjoint and conormal flux routes disagree: residual {residual:.3e} > {tolerance:.3e}")]
    FluxMismatch { residual: f64, tolerance: f64 },

    #[error("coefficients are not uniformly elliptic at cell ({cell_i}, {cell_j}): min eigenvalue {min_eig:.3e}")]
    NotElliptic { cell_i: usize, cell_j: usize, min_eig: f64 },

    #[error("invalid grid layout: {0}")]
    Layout(String),

    #[error("invalid partition: {0}")]
    Partition(String),

    #[error("model has no exterior partition")]
    NoExteriorPartition,

    #[error("model has no boundary diagonal split")]
    NoBoundarySplit,

    #[error("linear solve residual {achieved:.3e} exceeds tolerance {required:.3e}")]
    SolveResidual { achieved: f64, required: f64 },

    #[error("coefficient table: {0}")]
    CoefficientTable(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Attach the name of the operator a near-singular shift was tested
    /// against, so callers can tell which resolvent set was violated.
    pub(crate) fn with_operator(self, name: &'static str) -> Self {
        match self {
            Error::NearSingularShift { shift, min_sv, threshold, .. } => Error::NearSingularShift {
                operator: Some(name),
                shift,
                min_sv,
                threshold,
            },
            other => other,
        }
    }

    /// True for errors that mark a shift as rejected (outside the accepted
    /// resolvent set) rather than a structural problem with the model.
    pub fn is_rejected_shift(&self) -> bool {
        matches!(self, Error::NearSingularShift { .. } | Error::SingularQ { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
