use std::fmt;

/// Exit status for input that parsed but is not admissible.
pub const EXIT_VALIDATION: i32 = 2;
/// Exit status for failed numerical work.
pub const EXIT_NUMERIC: i32 = 3;
/// Exit status for output that could not be written.
pub const EXIT_IO: i32 = 74;
/// Exit status for malformed command lines.
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Numeric(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Validation(m) => write!(f, "{m}"),
            CliError::Numeric(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<patchdyn::Error> for CliError {
    fn from(e: patchdyn::Error) -> Self {
        use patchdyn::Error as E;
        match e {
            E::Domain(_) | E::Validation { .. } | E::Precondition(_) => {
                CliError::Validation(e.to_string())
            }
            E::Numeric(_) | E::Inconsistent(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
