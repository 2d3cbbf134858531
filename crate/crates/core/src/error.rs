use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value while evaluating {what} at q={q:?}, p={p:?}")]
    NonFinite {
        what: String,
        q: Vec<f64>,
        p: Vec<f64>,
    },

    /// A configuration-space singularity came closer than the guard radius.
    #[error("singularity approached (distance {distance:.3e}); last good time t={last_time}")]
    SingularityApproach { last_time: f64, distance: f64 },

    #[error("step size underflow at t={last_time} (h={step:.3e})")]
    StepUnderflow { last_time: f64, step: f64 },

    #[error("step budget of {steps} exhausted at t={last_time}")]
    StepLimit { last_time: f64, steps: usize },

    #[error("hyperspherical chart is singular: {0}")]
    ChartSingular(String),

    #[error("potential is not homogeneous of degree -2: U(r)={at_r}, U(2r)={at_2r}")]
    NotHomogeneous { at_r: f64, at_2r: f64 },

    #[error("configuration outside the potential's domain: {0}")]
    DomainError(String),

    /// r²(t) vanishes at `time` inside the requested interval.
    #[error("radial collapse at t={time} inside the requested interval")]
    CollapseOnPath { time: f64 },

    #[error("Klein coordinate undefined for I = 0")]
    ZeroI,

    #[error("inversion undefined at w = 0")]
    ZeroW,

    #[error("transformed radial variables need H > 0 (got H={0})")]
    NonPositiveH(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
