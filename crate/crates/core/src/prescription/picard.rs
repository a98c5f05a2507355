use super::field::{field_panels, panel_nodes, FieldData, RadialHarmonicField};
use super::source::{Density, SourceSpec};
use crate::error::{Error, Result};
use crate::geometry::{ConformalFactorSpec, MetricFamily, MetricSpec, Vec3};
use crate::harmonics::{count, HarmonicBasis};
use crate::quadrature::{RadialRule, SphereRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct PicardControls {
    /// Highest spherical-harmonic degree kept in the potential.
    pub lmax: usize,
    /// Degree of the sphere rule used to project the source.
    pub sphere_degree: usize,
    /// Outer radius of the tabulation grid.
    pub r_max: f64,
    pub radial: RadialRule,
    /// Stop once the sup-norm change of `u` on the grid drops below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Halve the coupling on `NoContraction` and retry.
    pub auto_shrink: bool,
    pub max_shrinks: usize,
    /// Number of points where the residual is spot-checked.
    pub validation_points: usize,
}

impl Default for PicardControls {
    fn default() -> Self {
        Self {
            lmax: 8,
            sphere_degree: 24,
            r_max: 1e4,
            radial: RadialRule::default(),
            tolerance: 1e-8,
            max_iterations: 200,
            auto_shrink: true,
            max_shrinks: 20,
            validation_points: 20,
        }
    }
}

/// Positive solution of `8 Lap u + a K u^5 = 0`, `u -> 1`, stored as
/// `u = 1 + v` with `v` tabulated on a radial harmonic grid.
#[derive(Debug, Clone)]
pub struct ConformalSolution {
    pub source: SourceSpec,
    /// Coupling actually used.
    pub coupling: f64,
    /// Coupling that was asked for.
    pub requested_coupling: f64,
    /// Number of iterates that changed `u`.
    pub iterations: usize,
    /// Sup-norm change of `u` on the grid, one entry per iterate.
    pub updates: Vec<f64>,
    /// Largest `|8 Lap u + a K u^5|` over the validation points.
    pub residual: f64,
    /// `m = -1/(2 pi) int f`, `f = -(a/8) K u^5`.
    pub mass: f64,
    pub field: Arc<RadialHarmonicField>,
}

/// Summary written next to the tabulated coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SolutionHeader {
    pub a: f64,
    pub m: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Deterministic points with radii from 0.3 to about 200 on a spiral of
/// directions.
pub fn validation_points(n: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let r = 0.3 * 2f64.powf(k as f64 * 9.5 / n.max(1) as f64);
            let z = 1.0 - (2.0 * k as f64 + 1.0) / n as f64;
            let s = (1.0 - z * z).sqrt();
            let t = golden * k as f64;
            [r * s * t.cos(), r * s * t.sin(), r * z]
        })
        .collect()
}

impl ConformalSolution {
    pub fn conformal_factor(&self, x: &Vec3) -> f64 {
        1.0 + self.field.potential(x)
    }

    /// `8 Lap u + a K u^5` at `x`, Laplacian by fourth-order differences.
    pub fn residual_at(&self, x: &Vec3) -> f64 {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let h = 0.01 * r.max(1.0);
        let u0 = self.conformal_factor(x);
        let mut lap = 0.0;
        for a in 0..3 {
            let at = |s: f64| {
                let mut p = *x;
                p[a] += s;
                self.conformal_factor(&p)
            };
            lap += (-at(2.0 * h) + 16.0 * at(h) - 30.0 * u0 + 16.0 * at(-h) - at(-2.0 * h))
                / (12.0 * h * h);
        }
        8.0 * lap + self.coupling * self.source.density(x) * u0.powi(5)
    }

    pub fn header(&self) -> SolutionHeader {
        SolutionHeader {
            a: self.coupling,
            m: self.mass,
            residual: self.residual,
            iterations: self.iterations,
        }
    }

    /// `r,index,coefficient` rows of the potential `v = u - 1` at the grid
    /// nodes.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,index,coefficient\n");
        for r in self.field.node_radii() {
            for (idx, p) in self.field.profiles(r).iter().enumerate() {
                let _ = writeln!(s, "{:.16e},{},{:.16e}", r, idx, p[0]);
            }
        }
        s
    }
}

/// `u = 1 + v` at every (radius, sphere node) pair.
fn grid_values(field: &RadialHarmonicField, radii: &[f64], ys: &[Vec<f64>]) -> Vec<Vec<f64>> {
    radii
        .par_iter()
        .map(|&r| {
            let prof = field.profiles(r);
            ys.iter()
                .map(|y| 1.0 + y.iter().zip(&prof).map(|(yk, p)| yk * p[0]).sum::<f64>())
                .collect()
        })
        .collect()
}

/// Fixed-point iteration `u <- 1 + N[-(a/8) K u^5]` at a fixed coupling.
pub fn picard_iterate(k: &SourceSpec, a: f64, ctl: &PicardControls) -> Result<ConformalSolution> {
    let panels = field_panels(&ctl.radial, ctl.r_max, &k.breakpoints());
    let n = ctl.radial.nodes_per_panel;
    let radii = panel_nodes(&panels, n);
    let rule = SphereRule::new(ctl.sphere_degree.max(2 * ctl.lmax));
    let basis = HarmonicBasis::new(ctl.lmax);
    let nh = count(ctl.lmax);
    let ys: Vec<Vec<f64>> = rule.nodes().iter().map(|z| basis.eval(z)).collect();
    let weights = rule.weights();
    let kvals: Vec<Vec<f64>> = radii
        .par_iter()
        .map(|&r| {
            rule.nodes()
                .iter()
                .map(|z| k.density(&[r * z[0], r * z[1], r * z[2]]))
                .collect()
        })
        .collect();

    let mut u: Vec<Vec<f64>> = vec![vec![1.0; rule.len()]; radii.len()];
    let mut updates: Vec<f64> = Vec::new();
    let mut growing = 0;
    let field = loop {
        let source: Vec<Vec<f64>> = (0..radii.len())
            .into_par_iter()
            .map(|i| {
                let mut c = vec![0.0; nh];
                for j in 0..ys.len() {
                    let f = -0.125 * a * kvals[i][j] * u[i][j].powi(5) * weights[j];
                    if f != 0.0 {
                        for (ck, yk) in c.iter_mut().zip(&ys[j]) {
                            *ck += f * yk;
                        }
                    }
                }
                c
            })
            .collect();
        let next = RadialHarmonicField::new(FieldData {
            lmax: ctl.lmax,
            panels: panels.clone(),
            nodes_per_panel: n,
            source,
        });
        let u_next = grid_values(&next, &radii, &ys);
        let mut update: f64 = 0.0;
        let mut min_u = f64::INFINITY;
        for (row, old) in u_next.iter().zip(&u) {
            for (v, w) in row.iter().zip(old) {
                update = update.max((v - w).abs());
                min_u = min_u.min(*v);
            }
        }
        if !update.is_finite() || min_u <= 0.0 {
            return Err(Error::NoContraction { coupling: a });
        }
        if let Some(prev) = updates.last() {
            if update >= *prev && update > 0.0 {
                growing += 1;
            } else {
                growing = 0;
            }
        }
        updates.push(update);
        log::debug!(
            "picard a={a:.4e} iterate {} update {update:.3e}",
            updates.len()
        );
        u = u_next;
        if update < ctl.tolerance {
            break next;
        }
        if growing >= 3 || updates.len() >= ctl.max_iterations {
            return Err(Error::NoContraction { coupling: a });
        }
    };

    let field = Arc::new(field);
    let mass = -field.total_source() / (2.0 * PI);
    let mut sol = ConformalSolution {
        source: k.clone(),
        coupling: a,
        requested_coupling: a,
        iterations: updates.iter().filter(|u| **u > 0.0).count(),
        updates,
        residual: 0.0,
        mass,
        field,
    };
    sol.residual = validation_points(ctl.validation_points)
        .par_iter()
        .map(|x| sol.residual_at(x).abs())
        .reduce(|| 0.0, f64::max);
    Ok(sol)
}

/// Solves `8 Lap u + a K u^5 = 0` for `K >= 0`, halving `a` until the
/// iteration contracts when `auto_shrink` is set.
pub fn picard_solve(k: &SourceSpec, a: f64, ctl: &PicardControls) -> Result<ConformalSolution> {
    k.check()?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "coupling must be positive, got {a}"
        )));
    }
    if let Some(y) = k.find_negative() {
        return Err(Error::InvalidSpec(format!("source is negative at {y:?}")));
    }
    let mut coupling = a;
    let mut shrinks = 0;
    loop {
        match picard_iterate(k, coupling, ctl) {
            Ok(mut sol) => {
                sol.requested_coupling = a;
                return Ok(sol);
            }
            Err(Error::NoContraction { .. }) if ctl.auto_shrink && shrinks < ctl.max_shrinks => {
                log::info!("no contraction at a = {coupling:.4e}, halving");
                coupling *= 0.5;
                shrinks += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Conformally flat metric `u^4 delta` of a solved prescription problem.
pub fn build_counterexample_metric(sol: &ConformalSolution) -> MetricSpec {
    MetricSpec::new(MetricFamily::ConformalFlat(
        ConformalFactorSpec::NumericPotential {
            m: sol.mass,
            field: sol.field.clone(),
        },
    ))
    .with_rho0(0.0)
}
