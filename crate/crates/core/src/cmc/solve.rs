use super::surface::{CmcSurface, Curvature};
use crate::error::{Error, Result};
use crate::geometry::{MetricSpec, Vec3};
use crate::harmonics::{count, index};
use crate::quadrature::SphereRule;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct CmcControls {
    /// Degree of the sphere rule used for projections; `None` picks `3L + 6`.
    pub sphere_degree: Option<usize>,
    /// Stop once every projection is below `tolerance * 2/r`.
    pub tolerance: f64,
    /// Forward-difference step for Jacobian columns.
    pub fd_step: f64,
    pub max_iterations: usize,
    pub max_halvings: usize,
}

impl Default for CmcControls {
    fn default() -> Self {
        Self {
            sphere_degree: None,
            tolerance: 1e-10,
            fd_step: 1e-6,
            max_iterations: 30,
            max_halvings: 6,
        }
    }
}

impl CmcControls {
    pub fn rule(&self, lmax: usize) -> SphereRule {
        SphereRule::new(self.sphere_degree.unwrap_or(3 * lmax + 6))
    }
}

/// `2/r - 4m/r^2`.
pub fn cmc_target(spec: &MetricSpec, r: f64) -> f64 {
    2.0 / r - 4.0 * spec.mass() / (r * r)
}

/// Positions of the degree-1 harmonics `(x, y, z)` in the coefficient vector.
fn linear_slots() -> [usize; 3] {
    [index(1, 1), index(1, -1), index(1, 0)]
}

struct Residual<'a> {
    curv: Curvature<'a>,
    rule: SphereRule,
    /// Harmonics at the rule nodes, premultiplied by weight / sqrt(4 pi).
    weighted: Vec<Vec<f64>>,
    target: f64,
    radius: f64,
    lmax: usize,
}

impl<'a> Residual<'a> {
    fn new(spec: &'a MetricSpec, r: f64, lmax: usize, rule: SphereRule) -> Self {
        let curv = Curvature::new(spec, lmax);
        let c = 1.0 / (4.0 * PI).sqrt();
        let weighted = rule
            .nodes()
            .iter()
            .zip(rule.weights())
            .map(|(z, w)| curv.basis.eval(z).iter().map(|y| y * w * c).collect())
            .collect();
        Self {
            curv,
            rule,
            weighted,
            target: cmc_target(spec, r),
            radius: r,
            lmax,
        }
    }

    fn surface(&self, u: &[f64]) -> CmcSurface {
        let mut s = CmcSurface::round(self.radius, self.lmax);
        s.graph.copy_from_slice(u);
        for (k, slot) in linear_slots().into_iter().enumerate() {
            s.translation[k] = u[slot];
            s.graph[slot] = 0.0;
        }
        s
    }

    fn unknowns(&self, s: &CmcSurface) -> Vec<f64> {
        let mut u = s.graph.clone();
        for (k, slot) in linear_slots().into_iter().enumerate() {
            u[slot] = s.translation[k];
        }
        u
    }

    /// Projections of `H - target` onto every harmonic of degree `<= L`,
    /// scaled so that a constant offset `e` projects to `e` in degree 0.
    fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        let s = self.surface(u);
        let h: Vec<f64> = self
            .rule
            .nodes()
            .par_iter()
            .map(|z| self.curv.at(&s, z).map(|h| h - self.target))
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; count(self.lmax)];
        for (hv, ys) in h.iter().zip(&self.weighted) {
            for (o, y) in out.iter_mut().zip(ys) {
                *o += hv * y;
            }
        }
        Ok(out)
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Largest harmonic projection of `H - (2/r - 4m/r^2)` over degrees `<= L`.
pub fn cmc_residual(spec: &MetricSpec, s: &CmcSurface, ctl: &CmcControls) -> Result<f64> {
    let res = Residual::new(spec, s.radius, s.lmax, ctl.rule(s.lmax));
    Ok(sup(&res.eval(&res.unknowns(s))?))
}

/// Newton iteration from `start` for the constant mean curvature surface at
/// the same radius.
pub fn solve_cmc_from(
    spec: &MetricSpec,
    start: &CmcSurface,
    ctl: &CmcControls,
) -> Result<CmcSurface> {
    let (r, lmax) = (start.radius, start.lmax);
    if lmax < 4 {
        return Err(Error::InvalidSpec(format!(
            "harmonic degree must be at least 4, got {lmax}"
        )));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "radius must be positive, got {r}"
        )));
    }
    let res = Residual::new(spec, r, lmax, ctl.rule(lmax));
    let tol = ctl.tolerance * 2.0 / r;
    let n = count(lmax);
    let mut u = res.unknowns(start);
    let mut f = res.eval(&u)?;
    let mut norm = sup(&f);
    for it in 0..ctl.max_iterations {
        log::debug!("cmc r={r} newton {it} residual {norm:.3e}");
        if norm <= tol {
            return Ok(res.surface(&u));
        }
        let cols: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let mut v = u.clone();
                v[j] += ctl.fd_step;
                let fj = res.eval(&v)?;
                Ok(fj
                    .iter()
                    .zip(&f)
                    .map(|(a, b)| (a - b) / ctl.fd_step)
                    .collect())
            })
            .collect::<Result<_>>()?;
        let jac = DMatrix::from_fn(n, n, |i, j| cols[j][i]);
        let svd = jac.svd(true, true);
        let cut = 1e-12 * svd.singular_values.max();
        let step = svd
            .solve(&DVector::from_column_slice(&f), cut)
            .map_err(|_| Error::NewtonDiverged { residual: norm })?;

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=ctl.max_halvings {
            let trial: Vec<f64> = u
                .iter()
                .zip(step.iter())
                .map(|(a, d)| a - scale * d)
                .collect();
            if let Ok(ft) = res.eval(&trial) {
                let nt = sup(&ft);
                if nt < norm {
                    accepted = Some((trial, ft, nt));
                    break;
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some((trial, ft, nt)) => {
                u = trial;
                f = ft;
                norm = nt;
            }
            None => return Err(Error::NewtonDiverged { residual: norm }),
        }
    }
    if norm <= tol {
        Ok(res.surface(&u))
    } else {
        Err(Error::NewtonDiverged { residual: norm })
    }
}

/// Constant mean curvature `2/r - 4m/r^2` surface near the coordinate sphere
/// of radius `r`, harmonics up to degree `lmax`.
pub fn solve_cmc(spec: &MetricSpec, r: f64, lmax: usize, ctl: &CmcControls) -> Result<CmcSurface> {
    solve_cmc_from(spec, &CmcSurface::round(r, lmax), ctl)
}

/// Solves at every radius. The largest radius starts from the round sphere;
/// the others start from its solution rescaled by `tau ~ 1/r`, `psi ~ 1/r^2`.
/// Output is in the order of `radii`.
pub fn solve_cmc_series(
    spec: &MetricSpec,
    radii: &[f64],
    lmax: usize,
    ctl: &CmcControls,
) -> Result<Vec<CmcSurface>> {
    let Some(top) = radii.iter().copied().reduce(f64::max) else {
        return Ok(Vec::new());
    };
    let seed = solve_cmc(spec, top, lmax, ctl)?;
    radii
        .par_iter()
        .map(|&r| {
            if r == top {
                return Ok(seed.clone());
            }
            let q = top / r;
            let start = CmcSurface {
                radius: r,
                translation: seed.translation.map(|t| t * q),
                lmax,
                graph: seed.graph.iter().map(|c| c * q * q).collect(),
            };
            solve_cmc_from(spec, &start, ctl)
        })
        .collect()
}

/// Euclidean centroid of the constant mean curvature surface at radius `r`.
pub fn c_hy_at(spec: &MetricSpec, r: f64, lmax: usize, ctl: &CmcControls) -> Result<Vec3> {
    let s = solve_cmc(spec, r, lmax, ctl)?;
    Ok(s.euclidean_centroid(&ctl.rule(lmax)))
}
