use std::fmt;
use std::path::Path;

use heart_core::anchors::AnchorError;
use heart_core::edit::EditError;
use heart_core::io::IoError;
use heart_core::probes::ProbeError;
use heart_core::sphere::SphereError;
use heart_core::stats::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad parameter or input that parsed but is unusable. Exit code 1.
    Validation,
    /// Missing, unreadable, malformed or unwritable file. Exit code 2.
    Io,
}

/// One-line failure naming the subcommand and the offending parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub op: &'static str,
    pub param: String,
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn validation(op: &'static str, param: impl Into<String>, message: impl Into<String>) -> Self {
        CliError {
            op,
            param: param.into(),
            kind: ErrorKind::Validation,
            message: message.into(),
        }
    }

    pub fn io(op: &'static str, path: &Path, message: impl Into<String>) -> Self {
        CliError {
            op,
            param: path.display().to_string(),
            kind: ErrorKind::Io,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Validation => 1,
            ErrorKind::Io => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // keep it on one line whatever the source error printed
        let msg = self.message.replace('\n', " ");
        write!(f, "{}: {}: {}", self.op, self.param, msg)
    }
}

impl std::error::Error for CliError {}

/// How a library error maps onto the two exit classes, and which flag it
/// blames when it knows better than the call site.
pub trait Classify: fmt::Display {
    fn kind(&self) -> ErrorKind {
        ErrorKind::Validation
    }

    fn param(&self) -> Option<String> {
        None
    }

    fn message(&self) -> String {
        self.to_string()
    }
}

impl Classify for IoError {
    fn kind(&self) -> ErrorKind {
        ErrorKind::Io
    }

    fn param(&self) -> Option<String> {
        match self {
            IoError::File { path, .. } => Some(path.display().to_string()),
            _ => None,
        }
    }

    // the path is already the param
    fn message(&self) -> String {
        self.root().to_string()
    }
}

impl Classify for EditError {
    fn kind(&self) -> ErrorKind {
        match self {
            EditError::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }

    fn param(&self) -> Option<String> {
        match self {
            EditError::InvalidPlan { field, .. } => Some(flag(field)),
            EditError::MissingAnchor { role } => Some(format!("--{role}-source/--{role}-target")),
            _ => None,
        }
    }
}

impl Classify for ProbeError {
    fn kind(&self) -> ErrorKind {
        match self {
            ProbeError::Io(_) | ProbeError::Csv(_) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}

impl Classify for AnchorError {}
impl Classify for StatsError {}
impl Classify for SphereError {}

/// `inject_fraction` -> `--inject-fraction`.
pub fn flag(field: &str) -> String {
    format!("--{}", field.replace('_', "-"))
}

pub trait Context<T> {
    /// Attaches the subcommand and the parameter the failure is blamed on.
    fn ctx(self, op: &'static str, param: &str) -> Result<T, CliError>;
}

impl<T, E: Classify> Context<T> for Result<T, E> {
    fn ctx(self, op: &'static str, param: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError {
            op,
            param: e.param().unwrap_or_else(|| param.to_string()),
            kind: e.kind(),
            message: e.message(),
        })
    }
}
