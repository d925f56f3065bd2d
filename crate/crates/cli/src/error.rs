use std::fmt;

use archsearch::analysis::AnalysisError;
use archsearch::data::DataError;
use archsearch::sweep::SweepError;

/// Exit status for runtime and data failures.
pub const EXIT_RUNTIME: u8 = 1;
/// Exit status for usage and configuration failures.
pub const EXIT_USAGE: u8 = 2;

/// A failure reported as `error:<code>: <message>` on one stderr line.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub exit: u8,
}

impl CliError {
    pub fn new(code: &'static str, exit: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            exit,
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", EXIT_USAGE, message)
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self::new("config", EXIT_USAGE, message)
    }

    pub fn io(context: impl fmt::Display, err: std::io::Error) -> Self {
        Self::new("io", EXIT_RUNTIME, format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one_line: String = self
            .message
            .split(['\n', '\r'])
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .collect::<Vec<_>>()
            .join(" ");
        write!(f, "error:{}: {}", self.code, one_line)
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Io { .. } => Self::new("io", EXIT_RUNTIME, e.to_string()),
            DataError::TooFewDays(..) => Self::usage(e.to_string()),
            _ => Self::new("data", EXIT_RUNTIME, e.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::MalformedCsv { .. } => Self::new("sweep-csv", EXIT_RUNTIME, e.to_string()),
            SweepError::TopMTooLarge { .. } | SweepError::InvalidConfig(_) => Self::usage(e.to_string()),
            SweepError::Io(_) => Self::new("io", EXIT_RUNTIME, e.to_string()),
            SweepError::InsufficientData(_) => Self::new("data", EXIT_RUNTIME, e.to_string()),
            _ => Self::new("sweep", EXIT_RUNTIME, e.to_string()),
        }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::Sweep(s) => s.into(),
            AnalysisError::Io(_) => Self::new("io", EXIT_RUNTIME, e.to_string()),
            _ => Self::new("analysis", EXIT_RUNTIME, e.to_string()),
        }
    }
}
