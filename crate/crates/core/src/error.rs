use thiserror::Error;

/// Errors raised by the modeling pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time must be finite and non-negative, got {0}")]
    InvalidTime(f64),

    #[error("sub-generator is singular: phase {phase} never absorbs")]
    NonAbsorbing { phase: usize },

    #[error(transparent)]
    Fit(#[from] crate::phfit::FitError),

    #[error("hazard fit did not converge from any start (best residual {best_residual:.3e})")]
    HazardFitDiverged { best_residual: f64 },

    #[error("lumped state space exceeds the cap of {cap} states")]
    StateCapExceeded { cap: usize },

    #[error(
        "uniformization bound q*t = {qt:.3e} exceeds 1e10; split the horizon into shorter time steps"
    )]
    UniformizationOverflow { qt: f64 },

    #[error("invalid disk model: {0}")]
    InvalidModel(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
