use std::fmt;

use serde::Serialize;

/// Failure of a CLI run, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration; nothing was written.
    Config(String),
    /// A level or interval cap was hit; nothing was written.
    Capacity(String),
    /// Results were written but some rows are flagged.
    Flagged(String),
    /// Any other numerical or I/O failure.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Config(_) => 2,
            CliError::Capacity(_) => 3,
            CliError::Flagged(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Capacity(_) => "capacity",
            CliError::Flagged(_) => "flagged",
            CliError::Runtime(_) => "runtime",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Capacity(m) | CliError::Flagged(m) | CliError::Runtime(m) => m,
        }
    }

    /// One-line JSON record for stderr.
    pub fn error_line(&self) -> String {
        #[derive(Serialize)]
        struct Line<'a> {
            error: &'a str,
            exit: i32,
            message: &'a str,
        }
        serde_json::to_string(&Line {
            error: self.kind(),
            exit: self.exit_code(),
            message: self.message(),
        })
        .expect("error line serializes")
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<fermi_lab::Error> for CliError {
    fn from(e: fermi_lab::Error) -> Self {
        use fermi_lab::Error as E;
        match e {
            E::Domain(_) | E::Parse { .. } => CliError::Config(e.to_string()),
            E::Capacity(_) => CliError::Capacity(e.to_string()),
            E::NonFinite(_) | E::Solver(_) | E::Io(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
