use std::fmt;

use serde::Serialize;
use sitewave_core::materials::MaterialError;
use sitewave_core::recon::ReconError;
use sitewave_core::validation::ValidationError;
use sitewave_core::{SceneError, TracerError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    /// Bad or missing input (exit 1).
    Input,
    /// Physics or geometry refusal such as a non-watertight scene (exit 2).
    Refusal,
    /// Anything else (exit 3).
    Internal,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Input => 1,
            ErrorKind::Refusal => 2,
            ErrorKind::Internal => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub kind: ErrorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError { kind, stage: None, message: message.into() }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Input, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Internal, message)
    }

    pub fn at_stage(mut self, stage: &str) -> Self {
        self.stage.get_or_insert_with(|| stage.to_string());
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.stage {
            Some(s) => write!(f, "[{s}] {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<MaterialError> for CliError {
    fn from(e: MaterialError) -> Self {
        CliError::input(e.to_string())
    }
}

impl From<ReconError> for CliError {
    fn from(e: ReconError) -> Self {
        let kind = match e {
            ReconError::NonWatertight { .. } => ErrorKind::Refusal,
            _ => ErrorKind::Input,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<TracerError> for CliError {
    fn from(e: TracerError) -> Self {
        let kind = match e {
            TracerError::NotWatertight(_) => ErrorKind::Refusal,
            _ => ErrorKind::Input,
        };
        CliError::new(kind, e.to_string())
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        CliError::input(e.to_string())
    }
}

/// Reading a declared input failed.
pub fn read_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::input(format!("cannot read {}: {e}", path.display()))
}

/// Writing an output failed.
pub fn write_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::internal(format!("cannot write {}: {e}", path.display()))
}
