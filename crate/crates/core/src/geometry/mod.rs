//! Metric families and pointwise geometry.

mod curvature;
mod metric;
mod profile;

pub use curvature::{
    christoffel_at, christoffel_conformal, christoffel_from, dmetric_at, dmetric_fd, fd_step,
    metric_at, metric_jet_at, ricci_at, scalar_curvature_at, scalar_curvature_conformal,
    scalar_curvature_general, Christoffel3, MetricGradient, MetricJet, MetricValue,
};
pub use metric::{
    ConformalFactorSpec, MetricFamily, MetricSpec, MetricSpecJson, Perturbation, Vec3, FAMILIES,
};
pub use profile::{blend, ramp, smoothstep, PhiProfile, PhiSpec};
