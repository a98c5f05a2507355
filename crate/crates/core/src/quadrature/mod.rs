//! Deterministic quadrature over spheres, annuli and all of space.

mod gauss;
mod radial;
mod sphere;

pub use gauss::{gauss_legendre, gauss_on, pairwise_sum, pairwise_sum_n};
pub use radial::{
    check_decay, integrate_annulus, integrate_annulus_n, integrate_r3_decaying,
    sampled_decay_constants, DecayingIntegral, RadialRule,
};
pub use sphere::{integrate_sphere, integrate_sphere_n, Estimate, NodeSet, SphereRule};
