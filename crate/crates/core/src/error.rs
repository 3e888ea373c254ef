use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("profile parse error: {0}")]
    Parse(String),

    #[error("invalid profile at `{path}`: {message}")]
    Profile { path: String, message: String },

    #[error("unknown exchange mode `{0}`")]
    UnknownMode(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    State(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("norm drift {drift:.3e} exceeds tolerance {tolerance:.1e}; retry with a smaller step")]
    StepRejected { drift: f64, tolerance: f64 },

    #[error("invalid gate: {0}")]
    Gate(String),

    #[error("conflicting parallel group: {0}")]
    Conflict(String),

    #[error("circuit syntax error on group {group}: {message}")]
    Syntax { group: usize, message: String },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("no Pauli correction reproduces the input for outcome {0}")]
    NoCorrection(String),
}

impl Error {
    /// Short machine-readable category name.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Profile { .. } => "profile",
            Error::UnknownMode(_) => "unknown_mode",
            Error::Dimension { .. } => "dimension",
            Error::State(_) => "state",
            Error::Schedule(_) => "schedule",
            Error::StepRejected { .. } => "step_rejected",
            Error::Gate(_) => "gate",
            Error::Conflict(_) => "conflict",
            Error::Syntax { .. } => "syntax",
            Error::Calibration(_) => "calibration",
            Error::Invalid(_) => "invalid_argument",
            Error::NoCorrection(_) => "no_correction",
        }
    }
}
