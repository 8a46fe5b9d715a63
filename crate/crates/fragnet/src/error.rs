//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by parsing, validation, and the analysis stages.
#[derive(Debug, Error)]
pub enum Error {
    /// A delimited input file could not be parsed. Lines are 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// An input held no usable records.
    #[error("empty input: {0}")]
    EmptyInput(String),

    /// Input content was readable but inconsistent (bad label, duplicate
    /// row, node mismatch, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A caller violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A run configuration field is out of range or incoherent.
    #[error("config error: {0}")]
    Config(String),

    /// A JSON artifact declared a schema version this build does not read.
    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersion { expected: String, found: String },

    /// A requested subgroup has no members in the partition's node set.
    #[error("undefined subgroup: {0}")]
    UndefinedSubgroup(String),

    /// A hierarchy operation needs at least two levels.
    #[error("hierarchy has no transitions: {0}")]
    NoTransitions(String),

    /// Level filtering removed every level.
    #[error("empty hierarchy: {0}")]
    EmptyHierarchy(String),

    /// A pipeline stage failed; the stage name is preserved for reporting.
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Wraps an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// True for errors caused by bad user input rather than internal
    /// failures; the CLI maps these to a distinct exit code.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::EmptyInput(_)
            | Error::Validation(_)
            | Error::Config(_)
            | Error::SchemaVersion { .. }
            // Every path the tool touches is user-supplied, so filesystem
            // trouble counts as input trouble; likewise JSON parsing only
            // ever runs on user files.
            | Error::Io(_)
            | Error::Json(_) => true,
            Error::Stage { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}
