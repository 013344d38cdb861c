use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ArzError>;

#[derive(Debug, Error)]
pub enum ArzError {
    /// An argument lies outside the domain of a physical relation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The setpoint is in the wrong traffic regime for the requested operation.
    #[error("regime error: {0}")]
    Regime(String),

    /// Time step and grid spacing violate the CFL condition.
    #[error("CFL violation: courant number {courant:.4} exceeds {limit}")]
    Cfl { courant: f64, limit: f64 },

    /// The numerical solution left the physically valid region.
    #[error("simulation blowup at t = {t:.6} s, cell {cell}: {reason}")]
    Blowup { t: f64, cell: usize, reason: String },

    /// Caller passed mismatched arrays or states.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("config error at line {line}: {message}")]
    ConfigParse { line: usize, message: String },

    #[error("config error for key `{key}`: {message}")]
    ConfigValue { key: String, message: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ArzError {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            ArzError::ConfigParse { .. } | ArzError::ConfigValue { .. } => 2,
            ArzError::Data(_) | ArzError::Io { .. } => 3,
            ArzError::Blowup { .. } | ArzError::Cfl { .. } => 4,
            ArzError::Domain(_) | ArzError::Regime(_) | ArzError::Usage(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ArzError::Io { path: path.into(), source }
    }
}
