//! Free-space potentials and the conformal factor with prescribed scalar
//! curvature.

mod field;
mod picard;
mod potential;
mod source;

pub use field::{field_panels, panel_nodes, FieldData, RadialHarmonicField};
pub use picard::{
    build_counterexample_metric, picard_iterate, picard_solve, validation_points,
    ConformalSolution, PicardControls, SolutionHeader,
};
pub use potential::{
    first_moment, mass_from_source, newtonian_potential, source_integral, PotentialControls,
    PotentialField, PotentialValue,
};
pub use source::{Density, SourceSpec, TabulatedSource};
