use thiserror::Error;

/// Errors produced anywhere in the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}{}", context_suffix(.index))]
    DimensionMismatch {
        expected: usize,
        found: usize,
        index: Option<usize>,
    },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("state {index} is (numerically) the zero vector")]
    ZeroVector { index: usize },

    #[error("state {index} has norm {norm:.9}, too far from 1 to renormalize")]
    NotNormalized { index: usize, norm: f64 },

    #[error("state set is empty")]
    EmptySet,

    #[error("PGram is not a valid flag-overlap matrix: {0}")]
    InvalidPGram(String),

    #[error("efficiency {value} at position {position} is outside [0, 1]")]
    InvalidEfficiency { position: usize, value: f64 },

    #[error("number of copies must be at least 2 (got {0})")]
    InvalidCopies(usize),

    #[error(
        "efficiency {value} assigned to state {index}, which appears in the expansion of a dependent state"
    )]
    ZeroPatternViolation { index: usize, value: f64 },

    #[error("no state can be cloned: every independent state appears in some dependent expansion")]
    EmptyClonableSubset,

    #[error("efficiencies are infeasible (residual min eigenvalue {min_eigenvalue:.3e})")]
    InfeasibleGamma { min_eigenvalue: f64 },

    #[error("map is not an isometry (Gram deviation {deviation:.3e})")]
    NotIsometry { deviation: f64 },

    #[error(
        "input state lies outside the span of the independent subset (residual {residual:.3e})"
    )]
    OutOfSpan { residual: f64 },

    #[error("closed-form bound not available for this instance shape: {0}")]
    ShapeNotCovered(String),

    #[error("composite space of dimension {0} is too large to represent densely")]
    SpaceTooLarge(usize),
}

fn context_suffix(index: &Option<usize>) -> String {
    match index {
        Some(i) => format!(" (state {i})"),
        None => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
