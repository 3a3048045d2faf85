use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// A numeric contract was violated.
    Numeric(String),
    Usage(String),
    /// A parameter lies outside its valid range.
    Range(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Range(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Range(m) => write!(f, "out of range: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl From<rmtk::Error> for CliError {
    fn from(e: rmtk::Error) -> Self {
        if e.is_range() {
            CliError::Range(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}

pub fn range(msg: impl Into<String>) -> CliError {
    CliError::Range(msg.into())
}
