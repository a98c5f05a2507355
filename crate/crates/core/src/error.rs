use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("metric is not positive definite at x = {x:?}")]
    NonPositiveDefinite { x: [f64; 3] },

    #[error("center of mass is undefined for zero mass")]
    MassZero,

    #[error(
        "integrand does not decay at the declared rate (r^q|f| grew from {from:.3e} to {to:.3e})"
    )]
    TailNotDecaying { from: f64, to: f64 },

    #[error("need at least {needed} samples spanning {span} log-radius units, got {got}")]
    TooFewSamples {
        needed: usize,
        got: usize,
        span: f64,
    },

    #[error("fixed-point iteration is not contracting (coupling a = {coupling})")]
    NoContraction { coupling: f64 },

    #[error("Newton iteration diverged, last residual {residual:.3e}")]
    NewtonDiverged { residual: f64 },

    #[error("surface is degenerate at z = {z:?}")]
    DegenerateSurface { z: [f64; 3] },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// True for failures of an iterative numerical method, as opposed to bad
    /// input.
    pub fn is_numerical_failure(&self) -> bool {
        matches!(
            self,
            Error::NoContraction { .. }
                | Error::NewtonDiverged { .. }
                | Error::DegenerateSurface { .. }
                | Error::NonPositiveDefinite { .. }
                | Error::TailNotDecaying { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
