//! Center-of-mass and mass fluxes, scalar-curvature moments and the
//! classification of their behavior as `r` grows.

mod functional;
mod series;
mod verdict;

pub use functional::{
    adm_mass_at, c_cs_at, c_cs_flat_at, flux_at, flux_with_mass, scalar_moment_annulus,
    scalar_moments_annulus, FluxSample, Normal,
};
pub use series::{radius_grid, ComSeries};
pub use verdict::{
    fit_sinusoid, limit_verdict, LimitVerdict, SinusoidFit, MIN_LOG_SPAN, MIN_SAMPLES,
    TAIL_FIT_MIN_SAMPLES,
};
