use crate::error::{Error, Result};
use crate::geometry::{metric_jet_at, MetricSpec, Vec3};
use crate::harmonics::{count, degree_order, HarmonicBasis};
use crate::jet::{norm, Jet, Scalar};
use crate::quadrature::SphereRule;
use std::fmt::Write;

/// Perturbed sphere `F(z) = r (z + tau + psi(z) z)` with `psi` a finite
/// harmonic sum without degree-1 terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CmcSurface {
    pub radius: f64,
    /// Dimensionless translation; the geometric center is `radius * translation`.
    pub translation: Vec3,
    pub lmax: usize,
    /// Coefficients of `psi` in the real orthonormal basis, `count(lmax)`
    /// entries, degree-1 entries zero.
    pub graph: Vec<f64>,
}

impl CmcSurface {
    pub fn round(radius: f64, lmax: usize) -> Self {
        Self {
            radius,
            translation: [0.0; 3],
            lmax,
            graph: vec![0.0; count(lmax)],
        }
    }

    pub fn translated_round(radius: f64, translation: Vec3, lmax: usize) -> Self {
        Self {
            translation,
            ..Self::round(radius, lmax)
        }
    }

    pub fn center(&self) -> Vec3 {
        self.translation.map(|t| self.radius * t)
    }

    /// Embedding `F(z)` for a unit vector `z`.
    pub fn point(&self, basis: &HarmonicBasis, z: &Vec3) -> Vec3 {
        let psi = basis.synthesize(&self.graph, z);
        let c = self.center();
        [0, 1, 2].map(|k| c[k] + self.radius * (1.0 + psi) * z[k])
    }

    /// `sup |psi|` sampled on the nodes of `rule`.
    pub fn graph_sup(&self, rule: &SphereRule) -> f64 {
        let basis = HarmonicBasis::new(self.lmax);
        rule.nodes()
            .iter()
            .map(|z| basis.synthesize(&self.graph, z).abs())
            .fold(0.0, f64::max)
    }

    /// Root-sum-square of the coefficients of each degree.
    pub fn degree_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.lmax + 1];
        for (idx, c) in self.graph.iter().enumerate() {
            out[degree_order(idx).0] += c * c;
        }
        out.iter().map(|s| s.sqrt()).collect()
    }

    /// Euclidean-area-weighted centroid of the embedded surface.
    pub fn euclidean_centroid(&self, rule: &SphereRule) -> Vec3 {
        let basis = HarmonicBasis::new(self.lmax);
        let [sx, sy, sz, area] = rule.sum(|z| {
            let psi = basis.synthesize(&self.graph, &Jet::point(*z));
            let rho = self.radius * (1.0 + psi.v);
            // psi is evaluated on the unit sphere, so its gradient is tangential
            let grad2: f64 = (0..3)
                .map(|k| {
                    let t = psi.g[k] - psi.g.iter().zip(z).map(|(g, c)| g * c).sum::<f64>() * z[k];
                    t * t
                })
                .sum();
            let da = rho * (rho * rho + self.radius * self.radius * grad2).sqrt();
            [da * rho * z[0], da * rho * z[1], da * rho * z[2], da]
        });
        let c = self.center();
        [c[0] + sx / area, c[1] + sy / area, c[2] + sz / area]
    }

    /// Rows `quantity,l,m,value`: the radius, the translation, then every
    /// coefficient of `psi`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("quantity,l,m,value\n");
        let _ = writeln!(s, "radius,,,{:.16e}", self.radius);
        for (name, t) in ["tau_x", "tau_y", "tau_z"].iter().zip(self.translation) {
            let _ = writeln!(s, "{name},,,{t:.16e}");
        }
        for (idx, c) in self.graph.iter().enumerate() {
            let (l, m) = degree_order(idx);
            let _ = writeln!(s, "psi,{l},{m},{c:.16e}");
        }
        s
    }
}

/// Mean curvature evaluator with a cached harmonic basis.
pub(crate) struct Curvature<'a> {
    pub spec: &'a MetricSpec,
    pub basis: HarmonicBasis,
}

impl<'a> Curvature<'a> {
    pub fn new(spec: &'a MetricSpec, lmax: usize) -> Self {
        Self {
            spec,
            basis: HarmonicBasis::new(lmax),
        }
    }

    /// `H` at `F(z)` from the level set `|x - c| - r (1 + psi((x - c)/|x - c|))`.
    pub fn at(&self, s: &CmcSurface, z: &Vec3) -> Result<f64> {
        let x = self.point(s, z)?;
        let c = s.center();
        let xs = Jet::point(x);
        let y = [0, 1, 2].map(|k| xs[k].add_c(-c[k]));
        let rho = norm(&y);
        let ri = rho.recip();
        let zh = y.map(|v| v * ri);
        let psi = self.basis.synthesize(&s.graph, &zh);
        let phi = rho - psi.add_c(1.0).scale(s.radius);

        let jet = metric_jet_at(self.spec, &x)?;
        let gi = jet.value.g_inv;
        let gamma = jet.christoffel().gamma;
        let d = phi.g;
        let up: [f64; 3] = [0, 1, 2].map(|i| (0..3).map(|j| gi[(i, j)] * d[j]).sum());
        let len = (0..3).map(|i| up[i] * d[i]).sum::<f64>().sqrt();
        if !(len > 0.0 && len.is_finite()) {
            return Err(Error::DegenerateSurface { z: *z });
        }
        let mut h = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let p = gi[(i, j)] - up[i] * up[j] / (len * len);
                let hess = phi.h[i][j] - (0..3).map(|k| gamma[k][i][j] * d[k]).sum::<f64>();
                h += p * hess;
            }
        }
        Ok(h / len)
    }

    fn point(&self, s: &CmcSurface, z: &Vec3) -> Result<Vec3> {
        let n = z.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(n > 0.0) {
            return Err(Error::DegenerateSurface { z: *z });
        }
        let zn = z.map(|c| c / n);
        let psi = self.basis.synthesize(&s.graph, &zn);
        if !(1.0 + psi > 0.05) {
            return Err(Error::DegenerateSurface { z: *z });
        }
        Ok(s.point(&self.basis, &zn))
    }
}

/// Mean curvature of the surface at `F(z)` with respect to the outward
/// normal, so that a round coordinate sphere in flat space has `H = 2/r`.
pub fn mean_curvature_at(spec: &MetricSpec, surface: &CmcSurface, z: &Vec3) -> Result<f64> {
    Curvature::new(spec, surface.lmax).at(surface, z)
}
