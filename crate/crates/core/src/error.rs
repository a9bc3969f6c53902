use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("theta = {theta} lies outside the admissible domain [{lo}, {hi}]")]
    Domain { theta: f64, lo: f64, hi: f64 },

    /// A `1/sin θ` factor evaluated at (or numerically at) a pole.
    #[error("pole of the Euler chart at theta = {theta}")]
    Pole { theta: f64 },

    /// Integration abort: sin θ dropped below the chart guard or θ left the
    /// admissible domain. Carries the last state that was still valid.
    #[error(
        "singular configuration at t = {t}: theta = {theta} (last valid state t = {last_t}, theta = {last_theta})"
    )]
    Singularity {
        t: f64,
        theta: f64,
        last_t: f64,
        last_theta: f64,
    },

    #[error("invalid surface profile: {0}")]
    InvalidProfile(String),

    #[error("invalid body parameters: {0}")]
    InvalidBody(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular linear system")]
    SingularMatrix,

    #[error("constraint drift {residual:e} exceeds {limit:e} at t = {t}")]
    ConstraintDrift { t: f64, residual: f64, limit: f64 },

    #[error("adaptive step size underflow at t = {t} (h = {step:e})")]
    StepFailure { t: f64, step: f64 },
}

impl Error {
    pub fn is_singularity(&self) -> bool {
        matches!(self, Error::Singularity { .. })
    }
}
