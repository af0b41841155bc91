//! Experiment harness: run configuration, executors, curve fitting, presets,
//! and the command-line front end. Every simulation run lands in its own
//! directory with a config echo, a manifest, and a trajectory CSV, so a run
//! can be reproduced from its own output alone.

pub mod cli;
pub mod config;
pub mod execute;
pub mod fit;
pub mod output;
pub mod presets;

use thiserror::Error;

use crate::circle_field::FieldError;
use crate::lift2d::LiftError;
use crate::pointvortex::VortexError;
use crate::sqg1d::SqgError;

/// Harness failure, split by who is at fault: the environment, the config,
/// or the dynamics.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Filesystem or serialization trouble.
    #[error("io: {0}")]
    Io(String),
    /// The requested run is malformed or out of the supported range.
    #[error("config: {0}")]
    Config(String),
    /// The dynamics halted the run (blow-up guard, lost finiteness, drift).
    #[error("physics: {0}")]
    Physics(String),
}

/// Process exit code when the dynamics abort a run.
pub const EXIT_PHYSICS: i32 = 2;
/// Process exit code for a malformed request or io failure.
pub const EXIT_CONFIG: i32 = 3;

impl HarnessError {
    /// Maps the failure class to the process exit code.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Physics(_) => EXIT_PHYSICS,
            HarnessError::Io(_) | HarnessError::Config(_) => EXIT_CONFIG,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for HarnessError {
    fn from(e: serde_json::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

impl From<FieldError> for HarnessError {
    fn from(e: FieldError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<LiftError> for HarnessError {
    fn from(e: LiftError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<SqgError> for HarnessError {
    fn from(e: SqgError) -> Self {
        if e.is_physics() {
            HarnessError::Physics(e.to_string())
        } else {
            HarnessError::Config(e.to_string())
        }
    }
}

impl From<VortexError> for HarnessError {
    fn from(e: VortexError) -> Self {
        match e {
            VortexError::TooClose { .. }
            | VortexError::SpanTooWide { .. }
            | VortexError::NonFinite { .. } => HarnessError::Physics(e.to_string()),
            VortexError::Empty
            | VortexError::MismatchedWeights { .. }
            | VortexError::EnergyOutOfRange { .. } => HarnessError::Config(e.to_string()),
        }
    }
}

impl From<fit::FitError> for HarnessError {
    fn from(e: fit::FitError) -> Self {
        HarnessError::Config(e.to_string())
    }
}
