use crate::error::{Error, Result};
use crate::geometry::{metric_jet_at, scalar_curvature_at, MetricJet, MetricSpec, Vec3};
use crate::quadrature::{
    integrate_annulus_n, integrate_sphere_n, Estimate, RadialRule, SphereRule,
};
use std::f64::consts::PI;

/// Which normal and area element the flux integrand uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normal {
    /// `g`-unit normal of the coordinate sphere and the induced `g`-area.
    Metric,
    /// Euclidean normal and area.
    Euclidean,
}

/// Center-of-mass flux through `|x| = r` together with the mass flux.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxSample {
    pub r: f64,
    pub center: Vec3,
    pub error: Vec3,
    pub mass: f64,
    pub mass_error: f64,
}

fn metric_divergence(j: &MetricJet) -> [f64; 3] {
    // d_i g_ij - d_j g_ii
    let mut out = [0.0; 3];
    for (jj, o) in out.iter_mut().enumerate() {
        for i in 0..3 {
            *o += j.dg[i][i][jj] - j.dg[jj][i][i];
        }
    }
    out
}

/// Integrand `[x^a (div g).nu - (h_ia nu^i - tr h nu^a)] * (area ratio)` for
/// `a = 1..3`, followed by the Euclidean mass flux `(div g).nu_0`.
fn flux_integrand(spec: &MetricSpec, x: &Vec3, normal: Normal) -> Result<[f64; 4]> {
    let j = metric_jet_at(spec, x)?;
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let xh = [x[0] / r, x[1] / r, x[2] / r];
    let div = metric_divergence(&j);
    let (nu, area) = match normal {
        Normal::Euclidean => (xh, 1.0),
        Normal::Metric => {
            let gi = &j.value.g_inv;
            let mut nu = [0.0; 3];
            for (a, n) in nu.iter_mut().enumerate() {
                *n = (0..3).map(|k| gi[(a, k)] * xh[k]).sum();
            }
            let len = (0..3).map(|a| nu[a] * xh[a]).sum::<f64>().sqrt();
            for n in nu.iter_mut() {
                *n /= len;
            }
            (nu, j.value.sqrt_det * len)
        }
    };
    let g = &j.value.g;
    let trh = g.trace() - 3.0;
    let flux = (0..3).map(|k| div[k] * nu[k]).sum::<f64>();
    let mut out = [0.0; 4];
    for a in 0..3 {
        let h_nu: f64 = (0..3)
            .map(|i| (g[(i, a)] - if i == a { 1.0 } else { 0.0 }) * nu[i])
            .sum();
        out[a] = area * (x[a] * flux - (h_nu - trh * nu[a]));
    }
    out[3] = (0..3).map(|k| div[k] * xh[k]).sum();
    Ok(out)
}

/// Flux integrals over the coordinate sphere of radius `r`, normalized by
/// `1/(16 pi m)` (center) and `1/(16 pi)` (mass), with the declared mass of
/// `spec` used for the center.
pub fn flux_at(spec: &MetricSpec, r: f64, rule: &SphereRule, normal: Normal) -> Result<FluxSample> {
    flux_with_mass(spec, r, rule, normal, spec.mass())
}

/// As [`flux_at`] but normalized by the given mass.
pub fn flux_with_mass(
    spec: &MetricSpec,
    r: f64,
    rule: &SphereRule,
    normal: Normal,
    m: f64,
) -> Result<FluxSample> {
    if m == 0.0 {
        return Err(Error::MassZero);
    }
    let est = try_sphere(|x| flux_integrand(spec, &x, normal), r, rule)?;
    let c = 1.0 / (16.0 * PI * m);
    Ok(FluxSample {
        r,
        center: [c * est.value[0], c * est.value[1], c * est.value[2]],
        error: [
            c.abs() * est.error[0],
            c.abs() * est.error[1],
            c.abs() * est.error[2],
        ],
        mass: est.value[3] / (16.0 * PI),
        mass_error: est.error[3] / (16.0 * PI),
    })
}

/// Sphere quadrature of a fallible integrand; the first failure wins.
fn try_sphere<const N: usize, F>(f: F, r: f64, rule: &SphereRule) -> Result<Estimate<N>>
where
    F: Fn([f64; 3]) -> Result<[f64; N]> + Sync,
{
    let failure = std::sync::Mutex::new(None);
    let est = integrate_sphere_n(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                failure.lock().unwrap().get_or_insert(e);
                [0.0; N]
            }
        },
        r,
        rule,
    );
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

/// Center-of-mass flux with the `g`-normal and `g`-area element.
pub fn c_cs_at(spec: &MetricSpec, r: f64, rule: &SphereRule) -> Result<Vec3> {
    Ok(flux_at(spec, r, rule, Normal::Metric)?.center)
}

/// Center-of-mass flux with the Euclidean normal and area element.
pub fn c_cs_flat_at(spec: &MetricSpec, r: f64, rule: &SphereRule) -> Result<Vec3> {
    Ok(flux_at(spec, r, rule, Normal::Euclidean)?.center)
}

/// `(1/16 pi) int (d_i g_ij - d_j g_ii) nu_0^j dsigma_0`.
pub fn adm_mass_at(spec: &MetricSpec, r: f64, rule: &SphereRule) -> Result<f64> {
    let est = try_sphere(
        |x| Ok([flux_integrand(spec, &x, Normal::Euclidean)?[3]]),
        r,
        rule,
    )?;
    Ok(est.value[0] / (16.0 * PI))
}

/// `int_{r_in < |x| < r_out} x^a R dv_g` for all three `a`.
pub fn scalar_moments_annulus(
    spec: &MetricSpec,
    r_in: f64,
    r_out: f64,
    sphere: &SphereRule,
    radial: &RadialRule,
) -> Result<Estimate<3>> {
    let failure = std::sync::Mutex::new(None);
    let est = integrate_annulus_n(
        |x| {
            let run = || -> Result<[f64; 3]> {
                let rs = scalar_curvature_at(spec, &x)?;
                let vol = crate::geometry::metric_at(spec, &x)?.sqrt_det;
                Ok([x[0] * rs * vol, x[1] * rs * vol, x[2] * rs * vol])
            };
            run().unwrap_or_else(|e| {
                failure.lock().unwrap().get_or_insert(e);
                [0.0; 3]
            })
        },
        r_in,
        r_out,
        sphere,
        radial,
        &spec.radial_breakpoints(),
    );
    match failure.into_inner().unwrap() {
        Some(e) => Err(e),
        None => Ok(est),
    }
}

/// Component `alpha` (0-based) of [`scalar_moments_annulus`].
pub fn scalar_moment_annulus(
    spec: &MetricSpec,
    r_in: f64,
    r_out: f64,
    alpha: usize,
    sphere: &SphereRule,
    radial: &RadialRule,
) -> Result<f64> {
    Ok(scalar_moments_annulus(spec, r_in, r_out, sphere, radial)?.value[alpha])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{metric_at, Perturbation};

    /// The area factor `sqrt(det g) |dr|_g` equals the induced area of the
    /// coordinate sphere computed from tangent vectors.
    #[test]
    fn area_factor_matches_induced_two_metric() {
        let spec = MetricSpec::perturbed(
            1.0,
            Perturbation::DipoleShear {
                eps: 0.7,
                b: [0.2, -0.4, 1.0],
            },
        );
        for (th, ph) in [(0.4f64, 1.0f64), (1.3, 4.0), (2.6, 0.2)] {
            let r = 7.0;
            let x = [
                r * th.sin() * ph.cos(),
                r * th.sin() * ph.sin(),
                r * th.cos(),
            ];
            let et = [
                r * th.cos() * ph.cos(),
                r * th.cos() * ph.sin(),
                -r * th.sin(),
            ];
            let ep = [-r * th.sin() * ph.sin(), r * th.sin() * ph.cos(), 0.0];
            let g = metric_at(&spec, &x).unwrap();
            let ip = |a: &[f64; 3], b: &[f64; 3]| {
                let mut s = 0.0;
                for i in 0..3 {
                    for j in 0..3 {
                        s += a[i] * g.g[(i, j)] * b[j];
                    }
                }
                s
            };
            let induced =
                (ip(&et, &et) * ip(&ep, &ep) - ip(&et, &ep).powi(2)).sqrt() / (r * r * th.sin());
            let xh = [x[0] / r, x[1] / r, x[2] / r];
            let mut len = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    len += g.g_inv[(i, j)] * xh[i] * xh[j];
                }
            }
            let factor = g.sqrt_det * len.sqrt();
            assert!((induced - factor).abs() < 1e-12 * factor);
        }
    }
}
