//! Errors reported by the harness and the command line.
//!
//! Every error renders as one line of JSON so scripts can parse failures.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Usage,
    Config,
    Scenario,
    Io,
    Parse,
    Checkpoint,
    Training,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Error {
    pub kind: ErrorKind,
    pub message: String,
}

impl Error {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        Error {
            kind,
            message: message.into(),
        }
    }

    pub fn usage(m: impl Into<String>) -> Self {
        Self::new(ErrorKind::Usage, m)
    }

    pub fn config(m: impl Into<String>) -> Self {
        Self::new(ErrorKind::Config, m)
    }

    pub fn scenario(e: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Scenario, e.to_string())
    }

    pub fn io(m: impl Into<String>) -> Self {
        Self::new(ErrorKind::Io, m)
    }

    pub fn parse(m: impl Into<String>) -> Self {
        Self::new(ErrorKind::Parse, m)
    }

    pub fn checkpoint(m: impl Into<String>) -> Self {
        Self::new(ErrorKind::Checkpoint, m)
    }

    pub fn training(m: impl fmt::Display) -> Self {
        Self::new(ErrorKind::Training, m.to_string())
    }

    /// `{"error":"<kind>","message":"..."}` on one line.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind, "message": self.message.replace('\n', " ") }).to_string()
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Error {}

/// Attaches a path to an I/O error.
pub fn io_at(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(format!("{}: {e}", path.display()))
}
