use super::functional::{flux_at, FluxSample, Normal};
use crate::error::{Error, Result};
use crate::geometry::{MetricSpec, Vec3};
use crate::quadrature::SphereRule;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

/// Geometric grid `r_min 2^(k/points_per_octave)` up to `r_max`.
pub fn radius_grid(r_min: f64, r_max: f64, points_per_octave: u32) -> Vec<f64> {
    assert!(r_min > 0.0 && r_max >= r_min && points_per_octave > 0);
    let n = ((r_max / r_min).log2() * points_per_octave as f64 + 1e-9).floor() as i32;
    (0..=n)
        .map(|k| r_min * 2f64.powf(k as f64 / points_per_octave as f64))
        .collect()
}

/// A vector functional sampled along increasing radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComSeries {
    pub radii: Vec<f64>,
    pub values: Vec<Vec3>,
    pub errors: Vec<Vec3>,
    /// Mass flux at each radius, when computed.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mass: Vec<f64>,
}

impl ComSeries {
    pub fn new(radii: Vec<f64>, values: Vec<Vec3>, errors: Vec<Vec3>) -> Result<Self> {
        if radii.len() != values.len() || radii.len() != errors.len() {
            return Err(Error::InvalidSpec("series columns differ in length".into()));
        }
        if !radii.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidSpec(
                "radii must be strictly increasing".into(),
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("series values must be finite".into()));
        }
        Ok(Self {
            radii,
            values,
            errors,
            mass: Vec::new(),
        })
    }

    /// Evaluates the center-of-mass flux at every radius, in parallel.
    pub fn compute(
        spec: &MetricSpec,
        radii: &[f64],
        rule: &SphereRule,
        normal: Normal,
    ) -> Result<Self> {
        let samples: Vec<FluxSample> = radii
            .par_iter()
            .map(|&r| flux_at(spec, r, rule, normal))
            .collect::<Result<_>>()?;
        let mut s = Self::new(
            radii.to_vec(),
            samples.iter().map(|s| s.center).collect(),
            samples.iter().map(|s| s.error).collect(),
        )?;
        s.mass = samples.iter().map(|s| s.mass).collect();
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// `r,c1,c2,c3,err1,err2,err3,mass` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,c1,c2,c3,err1,err2,err3,mass\n");
        for k in 0..self.len() {
            let c = self.values[k];
            let e = self.errors[k];
            let m = self.mass.get(k).copied().unwrap_or(f64::NAN);
            let _ = writeln!(
                s,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.radii[k], c[0], c[1], c[2], e[0], e[1], e[2], m
            );
        }
        s
    }
}
