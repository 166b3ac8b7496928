use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("decomposition error: {message} (maximum feasible level is {max_level})")]
    Decomposition { message: String, max_level: usize },

    #[error("structural error: {0}")]
    Structural(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("degenerate matrix: column {column} has zero norm")]
    DegenerateMatrix { column: usize },

    #[error("regularizer saturation: entropy {entropy:e} is below the floor {floor:e}")]
    RegularizerSaturation { entropy: f64, floor: f64 },

    #[error("empty selection: every activation is below the truncation threshold {epsilon}")]
    EmptySelection { epsilon: f64 },

    #[error("non-finite loss component `{component}`")]
    NonFiniteLoss { component: &'static str },

    #[error("analysis error: {0}")]
    Analysis(String),

    #[error("alignment error: {0}")]
    Alignment(String),

    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("checkpoint version mismatch: found {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("checkpoint architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-parsable category name.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Input(_) => "input",
            Error::Decomposition { .. } => "decomposition",
            Error::Structural(_) => "structural",
            Error::Usage(_) => "usage",
            Error::DegenerateMatrix { .. } => "degenerate-matrix",
            Error::RegularizerSaturation { .. } => "regularizer-saturation",
            Error::EmptySelection { .. } => "empty-selection",
            Error::NonFiniteLoss { .. } => "non-finite-loss",
            Error::Analysis(_) => "analysis",
            Error::Alignment(_) => "alignment",
            Error::MissingFile(_) => "missing-file",
            Error::CorruptCheckpoint(_) => "corrupt-checkpoint",
            Error::VersionMismatch { .. } => "version-mismatch",
            Error::ArchitectureMismatch(_) => "architecture-mismatch",
            Error::Io(_) => "io",
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Config(_) => 3,
            Error::MissingFile(_) => 4,
            Error::Io(_) => 5,
            Error::CorruptCheckpoint(_) => 6,
            Error::VersionMismatch { .. } => 7,
            Error::ArchitectureMismatch(_) => 8,
            Error::Input(_) => 9,
            Error::Decomposition { .. } | Error::Structural(_) => 10,
            Error::DegenerateMatrix { .. }
            | Error::RegularizerSaturation { .. }
            | Error::EmptySelection { .. }
            | Error::NonFiniteLoss { .. } => 11,
            Error::Analysis(_) | Error::Alignment(_) => 12,
        }
    }
}
