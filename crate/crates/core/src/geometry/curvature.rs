//! Pointwise metric, Christoffel symbols and curvature.

use super::metric::{MetricSpec, Vec3};
use crate::error::{Error, Result};
use crate::jet::Jet;
use nalgebra::Matrix3;

/// `g`, its inverse and `sqrt(det g)` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricValue {
    pub g: Matrix3<f64>,
    pub g_inv: Matrix3<f64>,
    pub sqrt_det: f64,
}

/// `d[k][i][j] = d_k g_ij`.
pub type MetricGradient = [[[f64; 3]; 3]; 3];

/// `gamma[k][i][j] = Gamma^k_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel3 {
    pub gamma: [[[f64; 3]; 3]; 3],
}

impl Christoffel3 {
    pub fn zero() -> Self {
        Self {
            gamma: [[[0.0; 3]; 3]; 3],
        }
    }

    pub fn max_abs_diff(&self, other: &Christoffel3) -> f64 {
        let mut m: f64 = 0.0;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    m = m.max((self.gamma[k][i][j] - other.gamma[k][i][j]).abs());
                }
            }
        }
        m
    }
}

/// Metric value together with its exact first derivatives.
#[derive(Debug, Clone, Copy)]
pub struct MetricJet {
    pub value: MetricValue,
    pub dg: MetricGradient,
}

impl MetricJet {
    pub fn christoffel(&self) -> Christoffel3 {
        christoffel_from(&self.value.g_inv, &self.dg)
    }
}

/// Step for central differences at `x`.
pub fn fd_step(x: &Vec3) -> f64 {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    (1e-4 * r).max(1e-6)
}

fn finish(g: Matrix3<f64>, x: &Vec3) -> Result<MetricValue> {
    let chol = g
        .cholesky()
        .filter(|c| c.l().diagonal().iter().all(|d| *d > 0.0 && d.is_finite()))
        .ok_or(Error::NonPositiveDefinite { x: *x })?;
    let sqrt_det = chol.l().diagonal().product();
    let g_inv = chol.inverse();
    Ok(MetricValue { g, g_inv, sqrt_det })
}

pub fn metric_at(spec: &MetricSpec, x: &Vec3) -> Result<MetricValue> {
    if let Some(u) = spec.conformal_factor(x) {
        if !(u > 0.0 && u.is_finite()) {
            return Err(Error::NonPositiveDefinite { x: *x });
        }
        let u4 = u.powi(4);
        return Ok(MetricValue {
            g: Matrix3::identity() * u4,
            g_inv: Matrix3::identity() / u4,
            sqrt_det: u4 * u * u,
        });
    }
    let m = spec.metric(x);
    finish(Matrix3::from_fn(|i, j| m[i][j]), x)
}

/// Metric and exact first derivatives.
pub fn metric_jet_at(spec: &MetricSpec, x: &Vec3) -> Result<MetricJet> {
    let mut dg = [[[0.0; 3]; 3]; 3];
    if let Some(u) = spec.conformal_factor(&Jet::point(*x)) {
        if !(u.v > 0.0 && u.v.is_finite()) {
            return Err(Error::NonPositiveDefinite { x: *x });
        }
        let u4 = u.v.powi(4);
        let c = 4.0 * u.v.powi(3);
        for (k, dk) in dg.iter_mut().enumerate() {
            for (i, row) in dk.iter_mut().enumerate() {
                row[i] = c * u.g[k];
            }
        }
        let value = MetricValue {
            g: Matrix3::identity() * u4,
            g_inv: Matrix3::identity() / u4,
            sqrt_det: u4 * u.v * u.v,
        };
        return Ok(MetricJet { value, dg });
    }
    let m = spec.metric(&Jet::point(*x));
    let value = finish(Matrix3::from_fn(|i, j| m[i][j].v), x)?;
    for (k, dk) in dg.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                dk[i][j] = m[i][j].g[k];
            }
        }
    }
    Ok(MetricJet { value, dg })
}

/// `d_k g_ij` from the chain rule through the closed-form metric.
pub fn dmetric_at(spec: &MetricSpec, x: &Vec3) -> MetricGradient {
    let m = spec.metric(&Jet::point(*x));
    let mut dg = [[[0.0; 3]; 3]; 3];
    for (k, dk) in dg.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                dk[i][j] = m[i][j].g[k];
            }
        }
    }
    dg
}

/// `d_k g_ij` by central differences with step `h`.
pub fn dmetric_fd(spec: &MetricSpec, x: &Vec3, h: f64) -> MetricGradient {
    let mut dg = [[[0.0; 3]; 3]; 3];
    for (k, dk) in dg.iter_mut().enumerate() {
        let mut xp = *x;
        let mut xm = *x;
        xp[k] += h;
        xm[k] -= h;
        let gp = spec.metric(&xp);
        let gm = spec.metric(&xm);
        for i in 0..3 {
            for j in 0..3 {
                dk[i][j] = (gp[i][j] - gm[i][j]) / (2.0 * h);
            }
        }
    }
    dg
}

/// Levi-Civita connection `1/2 g^{kl} (d_i g_lj + d_j g_li - d_l g_ij)`.
pub fn christoffel_from(g_inv: &Matrix3<f64>, dg: &MetricGradient) -> Christoffel3 {
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let mut lower = [0.0; 3];
            for (l, low) in lower.iter_mut().enumerate() {
                *low = 0.5 * (dg[i][l][j] + dg[j][l][i] - dg[l][i][j]);
            }
            for (k, gk) in gamma.iter_mut().enumerate() {
                let v = (0..3).map(|l| g_inv[(k, l)] * lower[l]).sum::<f64>();
                gk[i][j] = v;
                gk[j][i] = v;
            }
        }
    }
    Christoffel3 { gamma }
}

pub fn christoffel_at(spec: &MetricSpec, x: &Vec3) -> Result<Christoffel3> {
    Ok(metric_jet_at(spec, x)?.christoffel())
}

/// Closed form for `u^4 delta`:
/// `Gamma^k_ij = 2/u (u_i delta_jk + u_j delta_ik - u_k delta_ij)`.
pub fn christoffel_conformal(u: &Jet) -> Christoffel3 {
    let mut gamma = [[[0.0; 3]; 3]; 3];
    let c = 2.0 / u.v;
    for (k, gk) in gamma.iter_mut().enumerate() {
        for i in 0..3 {
            for j in 0..3 {
                let mut v = 0.0;
                if j == k {
                    v += u.g[i];
                }
                if i == k {
                    v += u.g[j];
                }
                if i == j {
                    v -= u.g[k];
                }
                gk[i][j] = c * v;
            }
        }
    }
    Christoffel3 { gamma }
}

/// Ricci tensor from central differences of the connection:
/// `R_ij = d_k G^k_ij - d_j G^k_ki + G^k_kl G^l_ij - G^k_jl G^l_ki`.
pub fn ricci_at(spec: &MetricSpec, x: &Vec3) -> Result<Matrix3<f64>> {
    let h = fd_step(x);
    let gam = christoffel_at(spec, x)?.gamma;
    let mut dgam = [[[[0.0; 3]; 3]; 3]; 3]; // [m][k][i][j] = d_m Gamma^k_ij
    for (m, dm) in dgam.iter_mut().enumerate() {
        let mut xp = *x;
        let mut xm = *x;
        xp[m] += h;
        xm[m] -= h;
        let gp = christoffel_at(spec, &xp)?.gamma;
        let gm = christoffel_at(spec, &xm)?.gamma;
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    dm[k][i][j] = (gp[k][i][j] - gm[k][i][j]) / (2.0 * h);
                }
            }
        }
    }
    let mut ric = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                s += dgam[k][k][i][j] - dgam[j][k][k][i];
                for l in 0..3 {
                    s += gam[k][k][l] * gam[l][i][j] - gam[k][j][l] * gam[l][k][i];
                }
            }
            ric[(i, j)] = s;
        }
    }
    Ok(0.5 * (ric + ric.transpose()))
}

/// `g^{ij} R_ij` from [`ricci_at`].
pub fn scalar_curvature_general(spec: &MetricSpec, x: &Vec3) -> Result<f64> {
    let ric = ricci_at(spec, x)?;
    let gv = metric_at(spec, x)?;
    Ok(gv.g_inv.component_mul(&ric).sum())
}

/// `-8 u^-5 Lap u` for conformally flat metrics.
pub fn scalar_curvature_conformal(spec: &MetricSpec, x: &Vec3) -> Option<f64> {
    let u = spec.conformal_factor(&Jet::point(*x))?;
    Some(-8.0 * u.laplacian() / u.v.powi(5))
}

/// Scalar curvature: the conformal identity when it applies, the contracted
/// Ricci tensor otherwise.
pub fn scalar_curvature_at(spec: &MetricSpec, x: &Vec3) -> Result<f64> {
    match scalar_curvature_conformal(spec, x) {
        Some(r) if r.is_finite() => Ok(r),
        Some(_) => Err(Error::NonPositiveDefinite { x: *x }),
        None => scalar_curvature_general(spec, x),
    }
}
