use std::fmt;
use std::path::PathBuf;

use crate::config::Diagnostic;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{}", DiagList(.0))]
    Config(Vec<Diagnostic>),
    #[error("{context}: {message}")]
    Numeric { context: String, message: String },
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl LabError {
    /// 1 for configuration and IO problems, 2 for numeric failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) | LabError::Io { .. } => 1,
            LabError::Numeric { .. } => 2,
        }
    }

    pub fn numeric(context: impl Into<String>, err: impl fmt::Display) -> Self {
        LabError::Numeric { context: context.into(), message: err.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }
}

struct DiagList<'a>(&'a [Diagnostic]);

impl fmt::Display for DiagList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, d) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}
