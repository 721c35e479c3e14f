//! Error type shared across the crate.

use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Requested matrix parameters cannot be satisfied, or the randomized
    /// construction ran out of restarts.
    InfeasibleParameters(String),
    /// An enumeration or solver exceeded its configured budget.
    BudgetExceeded { budget: u64, needed: u64 },
    /// Vector/matrix dimensions disagree.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// An iterative solver hit its iteration cap before reaching tolerance.
    NonConvergence { iterations: usize },
    /// A mixture component collapsed during fitting.
    DegenerateComponent { component: usize },
    /// A run configuration failed validation.
    InvalidConfig(String),
    /// Malformed input file.
    Parse(String),
    /// I/O failure, with the path that caused it.
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InfeasibleParameters(msg) => write!(f, "infeasible parameters: {msg}"),
            Error::BudgetExceeded { budget, needed } => {
                write!(
                    f,
                    "enumeration budget exceeded: need {needed}, budget {budget}"
                )
            }
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => {
                write!(
                    f,
                    "dimension mismatch for {what}: expected {expected}, got {got}"
                )
            }
            Error::NonConvergence { iterations } => {
                write!(f, "no convergence after {iterations} iterations")
            }
            Error::DegenerateComponent { component } => {
                write!(f, "mixture component {component} degenerated")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid config: {msg}"),
            Error::Parse(msg) => write!(f, "parse error: {msg}"),
            Error::Io { path, source } => write!(f, "i/o error on {}: {source}", path.display()),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
