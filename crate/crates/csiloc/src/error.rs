//! Pipeline error type and its process exit-code mapping.

use std::path::PathBuf;

/// Exit code for configuration and input-validation failures.
pub const EXIT_VALIDATION: u8 = 1;
/// Exit code for runtime failures (I/O, training, simulation).
pub const EXIT_RUNTIME: u8 = 2;
/// Exit code for artifact integrity mismatches.
pub const EXIT_INTEGRITY: u8 = 3;

/// Anything a pipeline stage can fail with. Each variant carries enough
/// context to act on: config errors name the offending field, file errors
/// the path, parse errors the line.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The config file could not be read or is not valid TOML.
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },

    /// The config parsed but a field value is unusable.
    #[error("invalid config: {field}: {message}")]
    Invalid { field: String, message: String },

    /// A file operation failed.
    #[error("cannot {action} {path}: {source}")]
    Io {
        action: &'static str,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A data file has malformed content.
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    /// An artifact disagrees with the manifest or a checkpoint's layout
    /// reference; rerunning the upstream stage is the only fix.
    #[error("integrity mismatch: {message}")]
    Integrity { message: String },

    /// A core computation failed.
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
}

impl CliError {
    /// Wrap a core error with a description of what was being attempted.
    pub fn core(
        context: impl Into<String>,
        source: impl std::error::Error + Send + Sync + 'static,
    ) -> Self {
        CliError::Core { context: context.into(), source: Box::new(source) }
    }

    /// Shorthand for [`CliError::Invalid`].
    pub fn invalid(field: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Invalid { field: field.into(), message: message.into() }
    }

    /// Shorthand for [`CliError::Integrity`].
    pub fn integrity(message: impl Into<String>) -> Self {
        CliError::Integrity { message: message.into() }
    }

    /// Process exit code: 1 for validation, 2 for runtime, 3 for integrity.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Invalid { .. } | CliError::Parse { .. } => {
                EXIT_VALIDATION
            }
            CliError::Io { .. } | CliError::Core { .. } => EXIT_RUNTIME,
            CliError::Integrity { .. } => EXIT_INTEGRITY,
        }
    }
}
