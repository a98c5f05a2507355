//! Constant mean curvature spheres near infinity, their Euclidean centroid,
//! and comparison with the flux center of mass.

mod expansion;
mod solve;
mod surface;

pub use expansion::{
    expansion_terms, h_expansion_check, huang_gap, project_onto_linear_harmonic, GapSeries,
    HExpansionReport, HExpansionTerms,
};
pub use solve::{
    c_hy_at, cmc_residual, cmc_target, solve_cmc, solve_cmc_from, solve_cmc_series, CmcControls,
};
pub use surface::{mean_curvature_at, CmcSurface};
