use thiserror::Error;

/// Errors raised by the profile, flow and homogenization solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("adaptive integrator failed at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("bracket endpoint p = {p} classified as {found}, expected {expected}")]
    BracketFailure {
        p: f64,
        found: String,
        expected: &'static str,
    },

    #[error("shooting parameter did not settle: {0}")]
    NoConvergence(String),

    #[error("profile invariant violated: {0}")]
    InvariantViolation(String),

    #[error("argument {value} outside the tabulated range [0, {max}]")]
    OutOfRange { value: f64, max: f64 },

    #[error("graph cannot be written over the cone coordinate: {0}")]
    InversionFailure(String),

    #[error("diffusion coefficient {value} at zeta = {zeta} is not positive")]
    ParabolicityLoss { zeta: f64, value: f64 },

    #[error("time step rejected at t = {t} (dt = {dt}): {reason}")]
    StepRejected { t: f64, dt: f64, reason: String },

    #[error("degenerate exponent fit: {0}")]
    DegenerateFit(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
