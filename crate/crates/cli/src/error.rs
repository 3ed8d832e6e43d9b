use std::path::Path;

use parityforge_core::Error as CoreError;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("{0}")]
    Simulation(#[from] CoreError),

    #[error("malformed input file {path}: {message}")]
    Input { path: String, message: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Machine-readable failure description written to stderr.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub schema_version: &'static str,
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_mass: Option<f64>,
}

impl CliError {
    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: err.to_string() }
    }

    pub fn input(path: &Path, message: impl Into<String>) -> Self {
        CliError::Input { path: path.display().to_string(), message: message.into() }
    }

    /// Parameter errors raised by constructors are configuration errors.
    pub fn from_core_config(err: CoreError) -> Self {
        match err {
            CoreError::EvenM(m) => CliError::Config(vec![format!("M must be odd for the symmetric ansatz, got {m}")]),
            CoreError::InvalidParameter(msg) => CliError::Config(vec![msg]),
            other => CliError::Simulation(other),
        }
    }

    pub fn messages(&self) -> Vec<String> {
        match self {
            CliError::Config(v) => v.clone(),
            other => vec![other.to_string()],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Simulation(CoreError::ZeroProbability { .. }) => "ZeroProbability",
            CliError::Simulation(CoreError::TailOverflow { .. }) => "TailOverflow",
            CliError::Simulation(_) => "SimulationError",
            CliError::Input { .. } => "InputError",
            CliError::Io { .. } => "IoError",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input { .. } => 2,
            CliError::Simulation(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn record(&self) -> ErrorRecord {
        let (step, probability, tail_mass) = match self {
            CliError::Simulation(CoreError::ZeroProbability { step, probability }) => (*step, Some(*probability), None),
            CliError::Simulation(CoreError::TailOverflow { tail_mass, .. }) => (None, None, Some(*tail_mass)),
            _ => (None, None, None),
        };
        ErrorRecord {
            schema_version: crate::SCHEMA_VERSION,
            kind: self.kind(),
            message: self.to_string(),
            violations: match self {
                CliError::Config(v) => v.clone(),
                _ => Vec::new(),
            },
            step,
            probability,
            tail_mass,
        }
    }
}
