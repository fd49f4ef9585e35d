use std::fmt;
use std::io;

/// Errors produced by matrix construction, factorization updates, and solvers.
#[derive(Debug)]
pub enum Error {
    /// Operand shapes are incompatible.
    DimensionMismatch(String),
    /// A matrix entry is NaN or infinite.
    NonFiniteEntry { row: usize, col: usize },
    /// Appending this column would leave a diagonal entry below the
    /// singularity tolerance; the caller must not add it.
    SingularUpdate { column: usize },
    /// The column is already in the passive set.
    AlreadyPassive { column: usize },
    /// The column is not in the passive set.
    IndexNotPassive { column: usize },
    /// Both signs of a paired column may never be passive at once.
    TwinAlreadyPassive { column: usize },
    /// A triangular solve hit a (near-)zero diagonal.
    SingularDiagonal { index: usize },
    /// A column with zero norm where a nonzero one is required.
    ZeroColumn { column: usize },
    /// No passive component blocks the step.
    NoBlockingIndex,
    /// The point has a component below the feasibility tolerance.
    InfeasiblePoint { index: usize, value: f64 },
    /// The support columns are not numerically independent.
    RankDeficientSupport { column: usize },
    /// The l1 tradeoff weight must be positive.
    NonpositiveLambda { lambda: f64 },
    /// A configuration or argument value is out of range.
    InvalidParameter(String),
    /// Underlying I/O failure.
    Io(io::Error),
    /// A matrix or vector file could not be parsed.
    Parse { line: usize, message: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::NonFiniteEntry { row, col } => {
                write!(f, "non-finite entry at ({row}, {col})")
            }
            Error::SingularUpdate { column } => {
                write!(f, "column {column} is numerically dependent on the passive set")
            }
            Error::AlreadyPassive { column } => write!(f, "column {column} is already passive"),
            Error::IndexNotPassive { column } => write!(f, "column {column} is not passive"),
            Error::TwinAlreadyPassive { column } => {
                write!(f, "twin column {column} is already passive")
            }
            Error::SingularDiagonal { index } => {
                write!(f, "singular diagonal entry at position {index}")
            }
            Error::ZeroColumn { column } => write!(f, "column {column} has zero norm"),
            Error::NoBlockingIndex => write!(f, "no blocking passive component"),
            Error::InfeasiblePoint { index, value } => {
                write!(f, "infeasible point: x[{index}] = {value}")
            }
            Error::RankDeficientSupport { column } => {
                write!(f, "support is rank deficient at column {column}")
            }
            Error::NonpositiveLambda { lambda } => {
                write!(f, "lambda must be positive, got {lambda}")
            }
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Io(e) => write!(f, "i/o failure: {e}"),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Io(e)
    }
}
