use std::fmt;
use std::path::Path;

use aldar_core::AldarError;

pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_CONVERGENCE: i32 = 5;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Io(String),
    Model(AldarError),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Io(_) => EXIT_IO,
            CliError::Model(e) => match e {
                AldarError::InvalidParams(_)
                | AldarError::InvalidArgument(_)
                | AldarError::FourthMomentViolation { .. }
                | AldarError::OutOfBounds(_)
                | AldarError::SeriesTooShort { .. } => EXIT_USAGE,
                AldarError::NonFinite(_) => EXIT_PARSE,
                AldarError::NonConvergence(_) | AldarError::SelectionFailed | AldarError::OptimizerInconsistency { .. } => {
                    EXIT_CONVERGENCE
                }
                AldarError::Integration(_)
                | AldarError::ExplosivePath { .. }
                | AldarError::SingularInformation { .. }
                | AldarError::NotPositiveDefinite(_)
                | AldarError::Degenerate(_) => EXIT_NUMERIC,
            },
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Model(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<AldarError> for CliError {
    fn from(e: AldarError) -> Self {
        CliError::Model(e)
    }
}
