//! Metric families and their JSON form.

use super::profile::{ramp, PhiSpec};
use crate::jet::{dot, norm, Scalar};
use crate::prescription::RadialHarmonicField;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub type Vec3 = [f64; 3];

/// Conformal factor `u` of a metric `u^4 delta`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConformalFactorSpec {
    /// `1 + m/2r`.
    Schwarzschild { m: f64 },
    /// `1 + m/2r + b.x/r^3`.
    DipoleExact { m: f64, b: Vec3 },
    /// `1 + m/2r + phi(r) b.x/r^3`.
    DipoleModulated { m: f64, b: Vec3, phi: PhiSpec },
    /// `1 + v(x)` with `v` a tabulated potential decaying like `m/2r`.
    NumericPotential {
        m: f64,
        field: Arc<RadialHarmonicField>,
    },
}

impl ConformalFactorSpec {
    pub fn mass(&self) -> f64 {
        match self {
            Self::Schwarzschild { m }
            | Self::DipoleExact { m, .. }
            | Self::DipoleModulated { m, .. }
            | Self::NumericPotential { m, .. } => *m,
        }
    }

    /// `u` at `y` (already shifted), no interior blend.
    pub fn eval<T: Scalar>(&self, y: &[T; 3]) -> T {
        match self {
            Self::Schwarzschild { m } => norm(y).recip().scale(0.5 * m).add_c(1.0),
            Self::DipoleExact { m, b } => {
                let r = norm(y);
                let ri = r.recip();
                let bx = y[0].scale(b[0]) + y[1].scale(b[1]) + y[2].scale(b[2]);
                ri.scale(0.5 * m).add_c(1.0) + bx * ri * ri * ri
            }
            Self::DipoleModulated { m, b, phi } => {
                let r = norm(y);
                let ri = r.recip();
                let bx = y[0].scale(b[0]) + y[1].scale(b[1]) + y[2].scale(b[2]);
                let p = r.lift(phi.eval(r.value()));
                ri.scale(0.5 * m).add_c(1.0) + p * bx * ri * ri * ri
            }
            Self::NumericPotential { field, .. } => field.potential(y).add_c(1.0),
        }
    }
}

/// Closed-form perturbation `p_ij` added to the Schwarzschild metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Perturbation {
    /// `eps x_i x_j / r^4`.
    RadialShear { eps: f64 },
    /// `eps (b.x) x_i x_j / r^5`, odd under reflection.
    DipoleShear { eps: f64, b: Vec3 },
}

impl Perturbation {
    pub fn eval<T: Scalar>(&self, y: &[T; 3]) -> [[T; 3]; 3] {
        let r2 = dot(y, y);
        let coef = match self {
            Self::RadialShear { eps } => (r2 * r2).recip().scale(*eps),
            Self::DipoleShear { eps, b } => {
                let bx = y[0].scale(b[0]) + y[1].scale(b[1]) + y[2].scale(b[2]);
                bx * r2.powf(-2.5).scale(*eps)
            }
        };
        let mut p = [[T::cst(0.0); 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                p[i][j] = coef * y[i] * y[j];
                p[j][i] = p[i][j];
            }
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricFamily {
    ConformalFlat(ConformalFactorSpec),
    /// `(1 + m/2r)^4 delta + p`.
    SchwarzschildPerturbed {
        m: f64,
        p: Perturbation,
    },
}

/// A 3-metric on all of space: the declared family for `|x - shift| >= rho0`,
/// blended smoothly to the Euclidean metric on `rho0/2 <= |x - shift| <= rho0`,
/// Euclidean inside. `rho0 = 0` disables the blend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MetricSpecJson", into = "MetricSpecJson")]
pub struct MetricSpec {
    pub family: MetricFamily,
    pub rho0: f64,
    pub shift: Vec3,
}

enum Zone {
    Inner,
    Blend,
    Outer,
}

impl MetricSpec {
    pub fn new(family: MetricFamily) -> Self {
        Self {
            family,
            rho0: 1.0,
            shift: [0.0; 3],
        }
    }

    pub fn flat() -> Self {
        Self::schwarzschild(0.0)
    }

    pub fn schwarzschild(m: f64) -> Self {
        Self::new(MetricFamily::ConformalFlat(
            ConformalFactorSpec::Schwarzschild { m },
        ))
    }

    pub fn dipole_exact(m: f64, b: Vec3) -> Self {
        Self::new(MetricFamily::ConformalFlat(
            ConformalFactorSpec::DipoleExact { m, b },
        ))
    }

    pub fn dipole_modulated(m: f64, b: Vec3, phi: PhiSpec) -> Self {
        Self::new(MetricFamily::ConformalFlat(
            ConformalFactorSpec::DipoleModulated { m, b, phi },
        ))
    }

    pub fn perturbed(m: f64, p: Perturbation) -> Self {
        Self::new(MetricFamily::SchwarzschildPerturbed { m, p })
    }

    pub fn with_rho0(mut self, rho0: f64) -> Self {
        self.rho0 = rho0;
        self
    }

    /// Pullback under `x -> x - d`: the new metric at `x` is the old one at
    /// `x - d`.
    pub fn translated(mut self, d: Vec3) -> Self {
        for k in 0..3 {
            self.shift[k] += d[k];
        }
        self
    }

    pub fn mass(&self) -> f64 {
        match &self.family {
            MetricFamily::ConformalFlat(u) => u.mass(),
            MetricFamily::SchwarzschildPerturbed { m, .. } => *m,
        }
    }

    pub fn is_conformal(&self) -> bool {
        matches!(self.family, MetricFamily::ConformalFlat(_))
    }

    /// True when `x -> -x` leaves the metric unchanged.
    pub fn is_even(&self) -> bool {
        self.shift == [0.0; 3]
            && match &self.family {
                MetricFamily::ConformalFlat(ConformalFactorSpec::Schwarzschild { .. }) => true,
                MetricFamily::ConformalFlat(ConformalFactorSpec::DipoleExact { b, .. })
                | MetricFamily::ConformalFlat(ConformalFactorSpec::DipoleModulated { b, .. }) => {
                    *b == [0.0; 3]
                }
                MetricFamily::SchwarzschildPerturbed { p, .. } => {
                    matches!(p, Perturbation::RadialShear { .. })
                }
                _ => false,
            }
    }

    fn zone(&self, r: f64) -> Zone {
        if self.rho0 <= 0.0 || r >= self.rho0 {
            Zone::Outer
        } else if r <= 0.5 * self.rho0 {
            Zone::Inner
        } else {
            Zone::Blend
        }
    }

    fn shifted<T: Scalar>(&self, x: &[T; 3]) -> ([T; 3], f64) {
        let y = [
            x[0].add_c(-self.shift[0]),
            x[1].add_c(-self.shift[1]),
            x[2].add_c(-self.shift[2]),
        ];
        let r = (0..3).map(|k| y[k].value().powi(2)).sum::<f64>().sqrt();
        (y, r)
    }

    /// Effective conformal factor (interior blend included) for conformally
    /// flat families.
    pub fn conformal_factor<T: Scalar>(&self, x: &[T; 3]) -> Option<T> {
        let MetricFamily::ConformalFlat(u) = &self.family else {
            return None;
        };
        let (y, r) = self.shifted(x);
        Some(match self.zone(r) {
            Zone::Inner => T::cst(1.0),
            Zone::Outer => u.eval(&y),
            Zone::Blend => {
                let chi = norm(&y).lift(ramp(r, 0.5 * self.rho0, self.rho0));
                (chi * u.eval(&y).powi(4) + (T::cst(1.0) - chi)).powf(0.25)
            }
        })
    }

    /// Metric components at `x`.
    pub fn metric<T: Scalar>(&self, x: &[T; 3]) -> [[T; 3]; 3] {
        let mut g = [[T::cst(0.0); 3]; 3];
        match &self.family {
            MetricFamily::ConformalFlat(_) => {
                let u4 = self.conformal_factor(x).unwrap().powi(4);
                for (i, row) in g.iter_mut().enumerate() {
                    row[i] = u4;
                }
            }
            MetricFamily::SchwarzschildPerturbed { m, p } => {
                let (y, r) = self.shifted(x);
                if let Zone::Inner = self.zone(r) {
                    for (i, row) in g.iter_mut().enumerate() {
                        row[i] = T::cst(1.0);
                    }
                    return g;
                }
                let rr = norm(&y);
                let s4 = rr.recip().scale(0.5 * m).add_c(1.0).powi(4);
                let pij = p.eval(&y);
                for i in 0..3 {
                    for j in 0..3 {
                        g[i][j] = pij[i][j];
                    }
                    g[i][i] = g[i][i] + s4;
                }
                if let Zone::Blend = self.zone(r) {
                    let chi = rr.lift(ramp(r, 0.5 * self.rho0, self.rho0));
                    for i in 0..3 {
                        for j in 0..3 {
                            g[i][j] = chi * g[i][j];
                        }
                        g[i][i] = g[i][i] + (T::cst(1.0) - chi);
                    }
                }
            }
        }
        g
    }

    /// Deviation `g - (1 + 2m/|x|) delta` used by the mean-curvature
    /// expansion.
    pub fn linearized_remainder<T: Scalar>(&self, x: &[T; 3]) -> [[T; 3]; 3] {
        let mut q = self.metric(x);
        let lin = norm(x).recip().scale(2.0 * self.mass()).add_c(1.0);
        for (i, row) in q.iter_mut().enumerate() {
            row[i] = row[i] - lin;
        }
        q
    }

    /// Radii where the metric is only finitely smooth; radial quadrature
    /// panels should break there.
    pub fn radial_breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::new();
        if self.rho0 > 0.0 {
            out.extend([0.5 * self.rho0, self.rho0]);
        }
        if let MetricFamily::ConformalFlat(ConformalFactorSpec::DipoleModulated { phi, .. }) =
            &self.family
        {
            out.extend([0.5 * phi.t0, phi.t0]);
        }
        out
    }

    pub fn validate(&self) -> Vec<String> {
        MetricSpecJson::from(self.clone()).diagnostics("metric")
    }
}

/// Flat JSON form of [`MetricSpec`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MetricSpecJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<PhiSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<Arc<RadialHarmonicField>>,
}

pub const FAMILIES: [&str; 6] = [
    "flat",
    "schwarzschild",
    "dipole-exact",
    "dipole-modulated",
    "numeric-potential",
    "schwarzschild-perturbed",
];

impl MetricSpecJson {
    /// Every schema problem, each prefixed with the offending field path.
    pub fn diagnostics(&self, prefix: &str) -> Vec<String> {
        let mut errs = Vec::new();
        let Some(family) = self.family.as_deref() else {
            errs.push(format!(
                "{prefix}.family: required (one of {})",
                FAMILIES.join(", ")
            ));
            return errs;
        };
        if !FAMILIES.contains(&family) {
            errs.push(format!(
                "{prefix}.family: unknown family '{family}' (one of {})",
                FAMILIES.join(", ")
            ));
            return errs;
        }
        let mut allowed = vec!["rho0", "shift"];
        if family != "flat" {
            allowed.push("m");
            match self.m {
                None => errs.push(format!("{prefix}.m: required for family '{family}'")),
                Some(m) if !m.is_finite() => errs.push(format!("{prefix}.m: must be finite")),
                _ => {}
            }
        }
        if matches!(family, "dipole-exact" | "dipole-modulated") {
            allowed.push("b");
            match self.b {
                None => errs.push(format!("{prefix}.b: required for family '{family}'")),
                Some(b) if b.iter().any(|v| !v.is_finite()) => {
                    errs.push(format!("{prefix}.b: must be finite"))
                }
                _ => {}
            }
        }
        if family == "dipole-modulated" {
            allowed.push("phi");
            match &self.phi {
                None => errs.push(format!("{prefix}.phi: required for family '{family}'")),
                Some(phi) => {
                    errs.extend(phi.validate().into_iter().map(|e| format!("{prefix}.{e}")))
                }
            }
        }
        if family == "schwarzschild-perturbed" {
            allowed.push("perturbation");
            if self.perturbation.is_none() {
                errs.push(format!(
                    "{prefix}.perturbation: required for family '{family}'"
                ));
            }
        }
        if family == "numeric-potential" {
            allowed.push("field");
            match &self.field {
                None => errs.push(format!("{prefix}.field: required for family '{family}'")),
                Some(f) => errs.extend(
                    f.validate()
                        .into_iter()
                        .map(|e| format!("{prefix}.field: {e}")),
                ),
            }
        }
        if let Some(r) = self.rho0 {
            if !(r >= 0.0 && r.is_finite()) {
                errs.push(format!("{prefix}.rho0: must be finite and >= 0, got {r}"));
            }
        }
        let present = [
            ("m", self.m.is_some()),
            ("b", self.b.is_some()),
            ("phi", self.phi.is_some()),
            ("perturbation", self.perturbation.is_some()),
            ("field", self.field.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed.contains(&name) {
                errs.push(format!("{prefix}.{name}: not used by family '{family}'"));
            }
        }
        errs
    }
}

impl TryFrom<MetricSpecJson> for MetricSpec {
    type Error = String;

    fn try_from(j: MetricSpecJson) -> Result<Self, String> {
        let errs = j.diagnostics("metric");
        if !errs.is_empty() {
            return Err(errs.join("; "));
        }
        let m = j.m.unwrap_or(0.0);
        let family = match j.family.as_deref().unwrap() {
            "flat" => MetricFamily::ConformalFlat(ConformalFactorSpec::Schwarzschild { m: 0.0 }),
            "schwarzschild" => {
                MetricFamily::ConformalFlat(ConformalFactorSpec::Schwarzschild { m })
            }
            "dipole-exact" => {
                MetricFamily::ConformalFlat(ConformalFactorSpec::DipoleExact { m, b: j.b.unwrap() })
            }
            "dipole-modulated" => {
                MetricFamily::ConformalFlat(ConformalFactorSpec::DipoleModulated {
                    m,
                    b: j.b.unwrap(),
                    phi: j.phi.unwrap(),
                })
            }
            "numeric-potential" => {
                MetricFamily::ConformalFlat(ConformalFactorSpec::NumericPotential {
                    m,
                    field: j.field.unwrap(),
                })
            }
            _ => MetricFamily::SchwarzschildPerturbed {
                m,
                p: j.perturbation.unwrap(),
            },
        };
        Ok(MetricSpec {
            family,
            rho0: j.rho0.unwrap_or(1.0),
            shift: j.shift.unwrap_or([0.0; 3]),
        })
    }
}

impl From<MetricSpec> for MetricSpecJson {
    fn from(s: MetricSpec) -> Self {
        let mut j = MetricSpecJson {
            rho0: Some(s.rho0),
            shift: (s.shift != [0.0; 3]).then_some(s.shift),
            ..Default::default()
        };
        let (family, m) = match s.family {
            MetricFamily::ConformalFlat(ConformalFactorSpec::Schwarzschild { m }) => {
                ("schwarzschild", m)
            }
            MetricFamily::ConformalFlat(ConformalFactorSpec::DipoleExact { m, b }) => {
                j.b = Some(b);
                ("dipole-exact", m)
            }
            MetricFamily::ConformalFlat(ConformalFactorSpec::DipoleModulated { m, b, phi }) => {
                j.b = Some(b);
                j.phi = Some(phi);
                ("dipole-modulated", m)
            }
            MetricFamily::ConformalFlat(ConformalFactorSpec::NumericPotential { m, field }) => {
                j.field = Some(field);
                ("numeric-potential", m)
            }
            MetricFamily::SchwarzschildPerturbed { m, p } => {
                j.perturbation = Some(p);
                ("schwarzschild-perturbed", m)
            }
        };
        j.family = Some(family.to_string());
        j.m = Some(m);
        j
    }
}
