use std::path::PathBuf;

use fsbc::BreakdownCondition;
use thiserror::Error;

/// Process exit codes. Codes 3 to 5 follow the three breakdown alternatives.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const CONTROL_NORMS: u8 = 3;
    pub const VORTICITY: u8 = 4;
    pub const GEOMETRY: u8 = 5;
    pub const SOLVER: u8 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Format(#[from] FormatError),

    #[error(transparent)]
    Core(#[from] fsbc::Error),

    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Parse(_) => exit::USAGE,
            CliError::Core(e) => core_exit_code(e),
            _ => exit::FAILURE,
        }
    }
}

pub fn condition_exit_code(c: BreakdownCondition) -> u8 {
    match c {
        BreakdownCondition::ControlNorms => exit::CONTROL_NORMS,
        BreakdownCondition::Vorticity => exit::VORTICITY,
        BreakdownCondition::Geometry => exit::GEOMETRY,
    }
}

fn core_exit_code(e: &fsbc::Error) -> u8 {
    use fsbc::Error as E;
    match e {
        E::Halt { condition, .. } => condition_exit_code(*condition),
        E::DegenerateGeometry { .. } => exit::GEOMETRY,
        E::NonConvergence { .. } | E::IncompatibleNeumann { .. } => exit::SOLVER,
        E::InvalidCutoff(_) | E::InvalidGrid(_) | E::InvalidArgument(_) => exit::USAGE,
        E::ShapeMismatch(_) | E::Precondition(_) => exit::FAILURE,
    }
}

/// Errors in the on-disk formats.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("not a snapshot file (bad magic)")]
    BadMagic,

    #[error("snapshot version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("snapshot grid {found:?} does not match the configured grid {expected:?}")]
    Dimensions { found: [usize; 3], expected: [usize; 3] },

    #[error("snapshot depth b = {found} does not match the configured b = {expected}")]
    Depth { found: f64, expected: f64 },

    #[error("snapshot truncated: expected {expected} bytes, got {found}")]
    Truncated { expected: usize, found: usize },

    #[error("time series line {line}: {message}")]
    Timeseries { line: usize, message: String },

    #[error("history sidecar: {0}")]
    Sidecar(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
