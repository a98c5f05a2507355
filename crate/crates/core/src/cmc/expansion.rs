use super::solve::{solve_cmc_series, CmcControls};
use super::surface::{CmcSurface, Curvature};
use crate::com::c_cs_at;
use crate::error::{Error, Result};
use crate::geometry::{MetricSpec, Vec3};
use crate::jet::Jet;
use crate::quadrature::SphereRule;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write;

/// Terms of the large-`r` expansion of the mean curvature of the round
/// sphere `|x - r tau| = r` at the point `r (z + tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HExpansionTerms {
    /// `2/r`.
    pub leading: f64,
    /// `-4m/r^2`.
    pub mass: f64,
    /// `6m z.tau/r^2`.
    pub translation: f64,
    /// `9m^2/r^3`.
    pub mass_squared: f64,
    /// Contractions of `q = g - (1 + 2m/|x|) delta` and its first derivatives.
    pub remainder: f64,
}

impl HExpansionTerms {
    pub fn total(&self) -> f64 {
        self.leading + self.mass + self.translation + self.mass_squared + self.remainder
    }
}

/// Expansion terms at the unit vector `z`, with `q` evaluated at the point
/// `r (z + tau)` itself.
pub fn expansion_terms(spec: &MetricSpec, r: f64, tau: &Vec3, z: &Vec3) -> HExpansionTerms {
    let m = spec.mass();
    let x = [0, 1, 2].map(|k| r * (z[k] + tau[k]));
    let q = spec.linearized_remainder(&Jet::point(x));
    let y = z.map(|c| r * c);
    let mut qyy = 0.0;
    let mut tr = 0.0;
    let mut div_y = 0.0;
    let mut dyyy = 0.0;
    let mut dtr_y = 0.0;
    for i in 0..3 {
        tr += q[i][i].v;
        for k in 0..3 {
            dtr_y += q[i][i].g[k] * y[k];
        }
        for j in 0..3 {
            qyy += q[i][j].v * y[i] * y[j];
            div_y += q[i][j].g[i] * y[j];
            for k in 0..3 {
                dyyy += q[i][j].g[k] * y[i] * y[j] * y[k];
            }
        }
    }
    let r3 = r * r * r;
    let zt = z[0] * tau[0] + z[1] * tau[1] + z[2] * tau[2];
    HExpansionTerms {
        leading: 2.0 / r,
        mass: -4.0 * m / (r * r),
        translation: 6.0 * m * zt / (r * r),
        mass_squared: 9.0 * m * m / r3,
        remainder: dyyy / (2.0 * r3) + 2.0 * qyy / r3 - (div_y + tr - 0.5 * dtr_y) / r,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct HExpansionReport {
    pub radius: f64,
    pub translation: Vec3,
    /// `sup |H - expansion|` over the rule nodes.
    pub sup_discrepancy: f64,
    /// `r^4` times the above.
    pub scaled_discrepancy: f64,
    /// Node where the discrepancy is largest, with its terms.
    pub worst_direction: Vec3,
    pub worst_terms: HExpansionTerms,
}

/// Compares the numerical mean curvature of the round sphere `|x - r tau| = r`
/// with its expansion through `r^-3`.
pub fn h_expansion_check(
    spec: &MetricSpec,
    r: f64,
    tau: &Vec3,
    rule: &SphereRule,
) -> Result<HExpansionReport> {
    if tau.iter().map(|t| t * t).sum::<f64>() > 0.25 {
        return Err(Error::InvalidSpec(
            "translation must have length at most 1/2".into(),
        ));
    }
    let s = CmcSurface::translated_round(r, *tau, 0);
    let curv = Curvature::new(spec, 0);
    let rows: Vec<(f64, Vec3, HExpansionTerms)> = rule
        .nodes()
        .par_iter()
        .map(|z| {
            let terms = expansion_terms(spec, r, tau, z);
            let h = curv.at(&s, z)?;
            Ok(((h - terms.total()).abs(), *z, terms))
        })
        .collect::<Result<_>>()?;
    let (sup, dir, terms) =
        rows.into_iter()
            .fold((f64::NEG_INFINITY, [0.0; 3], None), |acc, (d, z, t)| {
                if d > acc.0 {
                    (d, z, Some(t))
                } else {
                    acc
                }
            });
    Ok(HExpansionReport {
        radius: r,
        translation: *tau,
        sup_discrepancy: sup,
        scaled_discrepancy: sup * r.powi(4),
        worst_direction: dir,
        worst_terms: terms.expect("rule has nodes"),
    })
}

/// Coefficient `c` with `c z^alpha` the L2 projection of `f` onto
/// `span{z^alpha}`: `(3/4 pi) int z^alpha f`.
pub fn project_onto_linear_harmonic<F>(f: F, alpha: usize, rule: &SphereRule) -> f64
where
    F: Fn(&Vec3) -> f64 + Sync,
{
    let [s] = rule.sum(|z| [z[alpha] * f(z)]);
    3.0 / (4.0 * PI) * s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GapSeries {
    pub radii: Vec<f64>,
    pub c_cs: Vec<Vec3>,
    pub c_hy: Vec<Vec3>,
    pub gaps: Vec<f64>,
    /// `p` in `gap ~ C r^-p` from a log-log least-squares fit, when at least
    /// two gaps are positive.
    pub exponent: Option<f64>,
}

impl GapSeries {
    /// Rows `r,gap,exponent`; the exponent column repeats the fitted value.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,gap,exponent\n");
        let p = self
            .exponent
            .map(|p| format!("{p:.16e}"))
            .unwrap_or_default();
        for (r, g) in self.radii.iter().zip(&self.gaps) {
            let _ = writeln!(s, "{r:.16e},{g:.16e},{p}");
        }
        s
    }
}

fn decay_exponent(radii: &[f64], gaps: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(gaps)
        .filter(|(_, g)| **g > 0.0)
        .map(|(r, g)| (r.ln(), g.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// `|c_CS(r) - c_HY(r)|` at each radius, with the flux center computed on
/// `flux_rule`.
pub fn huang_gap(
    spec: &MetricSpec,
    radii: &[f64],
    lmax: usize,
    ctl: &CmcControls,
    flux_rule: &SphereRule,
) -> Result<GapSeries> {
    let surfaces = solve_cmc_series(spec, radii, lmax, ctl)?;
    let rule = ctl.rule(lmax);
    let c_hy: Vec<Vec3> = surfaces
        .iter()
        .map(|s| s.euclidean_centroid(&rule))
        .collect();
    let c_cs: Vec<Vec3> = radii
        .par_iter()
        .map(|&r| c_cs_at(spec, r, flux_rule))
        .collect::<Result<_>>()?;
    let gaps: Vec<f64> = c_cs
        .iter()
        .zip(&c_hy)
        .map(|(a, b)| (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>().sqrt())
        .collect();
    Ok(GapSeries {
        radii: radii.to_vec(),
        exponent: decay_exponent(radii, &gaps),
        c_cs,
        c_hy,
        gaps,
    })
}
