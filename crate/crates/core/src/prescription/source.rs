use crate::error::{Error, Result};
use crate::geometry::{blend, ramp, Vec3};
use crate::jet::{dot, lift_point, norm, Scalar};
use serde::{Deserialize, Serialize};

/// A scalar density on R^3 that the potential solvers can integrate.
pub trait Density: Sync {
    fn density(&self, y: &Vec3) -> f64;

    /// Radii (about the origin) where the density loses smoothness.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    /// Declared decay order `q` in `|f| <= C r^-q`.
    fn decay_order(&self) -> f64 {
        4.0
    }
}

impl<F: Fn(&Vec3) -> f64 + Sync> Density for F {
    fn density(&self, y: &Vec3) -> f64 {
        self(y)
    }
}

fn default_smoothing() -> f64 {
    1.0
}

fn default_decay() -> f64 {
    4.0
}

/// Radial and dipole profiles given at sample radii.
///
/// `f(y) = m(|y|) + d(|y|) . y / |y|`, interpolated by cubic Hermite splines
/// in `log r` applied to `r^decay` times the samples, continued as
/// `r^-decay` beyond the last radius. Below the first radius the monopole is
/// held constant and the dipole part becomes linear in `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct TabulatedSource {
    pub radii: Vec<f64>,
    pub monopole: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dipole: Vec<Vec3>,
    #[serde(default = "default_decay")]
    pub decay: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    rename_all = "kebab-case",
    rename_all_fields = "camelCase",
    deny_unknown_fields
)]
pub enum SourceSpec {
    Zero {},
    /// `amplitude (1 - |y - center|^2 / radius^2)^4` inside the ball.
    RadialBump {
        amplitude: f64,
        radius: f64,
        #[serde(default)]
        center: Vec3,
    },
    /// `phi(r) b.y + amplitude eta(r)` with `phi = cos(log r) r^-5` and
    /// `eta = r^-4` beyond the smoothing radius, blended to constants inside.
    OscillatoryDipole {
        b: Vec3,
        amplitude: f64,
        #[serde(default = "default_smoothing")]
        smoothing_radius: f64,
    },
    Custom(TabulatedSource),
}

impl SourceSpec {
    pub fn oscillatory_dipole(b: Vec3, amplitude: f64) -> Self {
        Self::OscillatoryDipole {
            b,
            amplitude,
            smoothing_radius: 1.0,
        }
    }

    pub fn radial_bump(amplitude: f64, radius: f64) -> Self {
        Self::RadialBump {
            amplitude,
            radius,
            center: [0.0; 3],
        }
    }

    /// `int f dv_0` of a radial bump, in closed form.
    pub fn bump_integral(amplitude: f64, radius: f64) -> f64 {
        4.0 * std::f64::consts::PI * amplitude * radius.powi(3) * 128.0 / 3465.0
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let finite3 = |v: &Vec3| v.iter().all(|c| c.is_finite());
        match self {
            Self::Zero {} => {}
            Self::RadialBump {
                amplitude,
                radius,
                center,
            } => {
                if !amplitude.is_finite() {
                    errs.push("source.amplitude: must be finite".into());
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    errs.push(format!("source.radius: must be positive, got {radius}"));
                }
                if !finite3(center) {
                    errs.push("source.center: must be finite".into());
                }
            }
            Self::OscillatoryDipole {
                b,
                amplitude,
                smoothing_radius,
            } => {
                if !finite3(b) {
                    errs.push("source.b: must be finite".into());
                }
                if !amplitude.is_finite() {
                    errs.push("source.amplitude: must be finite".into());
                }
                if !(*smoothing_radius > 0.0 && smoothing_radius.is_finite()) {
                    errs.push(format!(
                        "source.smoothingRadius: must be positive, got {smoothing_radius}"
                    ));
                }
            }
            Self::Custom(t) => {
                let n = t.radii.len();
                if n < 2 {
                    errs.push("source.radii: need at least two samples".into());
                }
                if t.radii.iter().any(|r| !(*r > 0.0 && r.is_finite()))
                    || t.radii.windows(2).any(|w| w[1] <= w[0])
                {
                    errs.push("source.radii: must be positive and strictly increasing".into());
                }
                if t.monopole.len() != n {
                    errs.push(format!(
                        "source.monopole: expected {n} values, got {}",
                        t.monopole.len()
                    ));
                }
                if !t.dipole.is_empty() && t.dipole.len() != n {
                    errs.push(format!(
                        "source.dipole: expected {n} vectors or none, got {}",
                        t.dipole.len()
                    ));
                }
                if !(t.decay > 3.0 && t.decay.is_finite()) {
                    errs.push(format!("source.decay: must exceed 3, got {}", t.decay));
                }
            }
        }
        errs
    }

    pub fn check(&self) -> Result<()> {
        let errs = self.validate();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidSpec(errs.join("; ")))
        }
    }

    /// Samples the source on spheres `2^(k/4)`, `k = -8..=40`, and returns
    /// the first point where it is negative, if any.
    pub fn find_negative(&self) -> Option<Vec3> {
        probe_points().into_iter().find(|y| self.density(y) < 0.0)
    }

    /// `sup |K|` over the probe points used by [`SourceSpec::find_negative`].
    pub fn sampled_sup(&self) -> f64 {
        probe_points()
            .iter()
            .map(|y| self.density(y).abs())
            .fold(self.density(&[0.0; 3]).abs(), f64::max)
    }

    /// Value of the source, generic over jets.
    pub fn eval<T: Scalar>(&self, y: &[T; 3]) -> T {
        match self {
            Self::Zero {} => T::cst(0.0),
            Self::RadialBump {
                amplitude,
                radius,
                center,
            } => {
                let d = [
                    y[0].add_c(-center[0]),
                    y[1].add_c(-center[1]),
                    y[2].add_c(-center[2]),
                ];
                let s = dot(&d, &d).scale(1.0 / (radius * radius));
                if s.value() >= 1.0 {
                    T::cst(0.0)
                } else {
                    let w = (-s).add_c(1.0);
                    let w2 = w * w;
                    (w2 * w2).scale(*amplitude)
                }
            }
            Self::OscillatoryDipole {
                b,
                amplitude,
                smoothing_radius,
            } => {
                let r = norm(y);
                let (phi, eta) = dipole_profiles(r.value(), *smoothing_radius);
                let bx = dot(&lift_point(*b), y);
                r.lift(phi) * bx + r.lift(eta).scale(*amplitude)
            }
            Self::Custom(t) => t.eval(y),
        }
    }
}

/// `[phi, phi', phi'']` and `[eta, eta', eta'']` of the oscillatory dipole.
fn dipole_profiles(r: f64, rho: f64) -> ([f64; 3], [f64; 3]) {
    let raw = |r: f64| {
        let (s, c) = r.ln().sin_cos();
        let phi = [
            c / r.powi(5),
            -(s + 5.0 * c) / r.powi(6),
            (29.0 * c + 11.0 * s) / r.powi(7),
        ];
        let eta = [r.powi(-4), -4.0 * r.powi(-5), 20.0 * r.powi(-6)];
        (phi, eta)
    };
    if r >= rho {
        return raw(r);
    }
    let (phi_c, eta_c) = raw(rho);
    if r <= 0.5 * rho {
        return ([phi_c[0], 0.0, 0.0], [eta_c[0], 0.0, 0.0]);
    }
    let chi = ramp(r, 0.5 * rho, rho);
    let (phi, eta) = raw(r);
    (blend(chi, phi, phi_c[0]), blend(chi, eta, eta_c[0]))
}

impl TabulatedSource {
    /// Hermite spline of `r^q f` in `t = log r`, returned as `[f, f', f'']`
    /// in `r`.
    fn profile(&self, values: &[f64], r: f64) -> [f64; 3] {
        let q = self.decay;
        let n = self.radii.len();
        let t_at = |i: usize| self.radii[i].ln();
        let g_at = |i: usize| values[i] * self.radii[i].powf(q);
        let slope = |i: usize| {
            if i == 0 {
                (g_at(1) - g_at(0)) / (t_at(1) - t_at(0))
            } else if i == n - 1 {
                0.0
            } else {
                (g_at(i + 1) - g_at(i - 1)) / (t_at(i + 1) - t_at(i - 1))
            }
        };
        let t = r.ln();
        let (g, gt, gtt) = if r >= self.radii[n - 1] {
            (g_at(n - 1), 0.0, 0.0)
        } else {
            let i = self
                .radii
                .partition_point(|x| *x <= r)
                .saturating_sub(1)
                .min(n - 2);
            let (t0, t1) = (t_at(i), t_at(i + 1));
            let h = t1 - t0;
            let s = (t - t0) / h;
            let (p0, p1, m0, m1) = (g_at(i), g_at(i + 1), slope(i) * h, slope(i + 1) * h);
            let (s2, s3) = (s * s, s * s * s);
            let g = (2.0 * s3 - 3.0 * s2 + 1.0) * p0
                + (s3 - 2.0 * s2 + s) * m0
                + (-2.0 * s3 + 3.0 * s2) * p1
                + (s3 - s2) * m1;
            let gs = (6.0 * s2 - 6.0 * s) * p0
                + (3.0 * s2 - 4.0 * s + 1.0) * m0
                + (-6.0 * s2 + 6.0 * s) * p1
                + (3.0 * s2 - 2.0 * s) * m1;
            let gss = (12.0 * s - 6.0) * p0
                + (6.0 * s - 4.0) * m0
                + (-12.0 * s + 6.0) * p1
                + (6.0 * s - 2.0) * m1;
            (g, gs / h, gss / (h * h))
        };
        let rq = r.powf(-q);
        [
            g * rq,
            (gt - q * g) * rq / r,
            (gtt - (2.0 * q + 1.0) * gt + q * (q + 1.0) * g) * rq / (r * r),
        ]
    }

    fn eval<T: Scalar>(&self, y: &[T; 3]) -> T {
        let r = norm(y);
        let rv = r.value();
        let r0 = self.radii[0];
        let mono = if rv <= r0 {
            T::cst(self.monopole[0])
        } else {
            r.lift(self.profile(&self.monopole, rv))
        };
        if self.dipole.is_empty() {
            return mono;
        }
        let mut acc = mono;
        for a in 0..3 {
            let col: Vec<f64> = self.dipole.iter().map(|d| d[a]).collect();
            // d_a(r) y^a / r
            let term = if rv <= r0 {
                y[a].scale(col[0] / r0)
            } else {
                r.lift(self.profile(&col, rv)) * y[a] / r
            };
            acc = acc + term;
        }
        acc
    }
}

impl Density for SourceSpec {
    fn density(&self, y: &Vec3) -> f64 {
        self.eval(y)
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::Zero {} => Vec::new(),
            Self::RadialBump { radius, center, .. } => {
                let c = norm(center);
                [c - radius, c + radius]
                    .into_iter()
                    .filter(|r| *r > 0.0)
                    .collect()
            }
            Self::OscillatoryDipole {
                smoothing_radius, ..
            } => vec![0.5 * smoothing_radius, *smoothing_radius],
            Self::Custom(t) => vec![t.radii[0], *t.radii.last().unwrap()],
        }
    }

    fn decay_order(&self) -> f64 {
        match self {
            Self::Custom(t) => t.decay,
            _ => 4.0,
        }
    }
}

/// Sphere-rule nodes on radii `2^(k/4)`, `k = -8..=40`.
fn probe_points() -> Vec<Vec3> {
    let rule = crate::quadrature::SphereRule::new(16);
    (-8..=40)
        .flat_map(|k| {
            let r = 2f64.powf(k as f64 / 4.0);
            rule.nodes()
                .iter()
                .map(move |z| [r * z[0], r * z[1], r * z[2]])
                .collect::<Vec<_>>()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;

    #[test]
    fn profiles_match_finite_differences() {
        for src in [
            SourceSpec::oscillatory_dipole([0.3, -0.2, 1.0], 2.0),
            SourceSpec::Custom(TabulatedSource {
                radii: vec![1.0, 2.0, 4.0, 8.0],
                monopole: vec![1.0, 0.1, 0.01, 0.001],
                dipole: vec![[1.0, 0.0, 0.0], [0.5, 0.1, 0.0], [0.1, 0.0, 0.2], [0.0; 3]],
                decay: 4.0,
            }),
        ] {
            for x in [
                [0.4, 0.1, 0.3],
                [0.5, 0.4, -0.3],
                [2.2, -1.0, 0.5],
                [5.0, 3.0, 1.0],
            ] {
                let j = src.eval(&Jet::point(x));
                assert!((j.v - src.density(&x)).abs() < 1e-15);
                let h = 1e-5;
                for a in 0..3 {
                    let (mut p, mut m) = (x, x);
                    p[a] += h;
                    m[a] -= h;
                    let fd = (src.density(&p) - src.density(&m)) / (2.0 * h);
                    assert!(
                        (fd - j.g[a]).abs() < 1e-6 * (1.0 + j.g[a].abs()),
                        "{x:?} {a}"
                    );
                    let hd =
                        (src.eval(&Jet::point(p)).g[a] - src.eval(&Jet::point(m)).g[a]) / (2.0 * h);
                    assert!((hd - j.h[a][a]).abs() < 1e-5 * (1.0 + j.h[a][a].abs()));
                }
            }
        }
    }

    #[test]
    fn bump_integral_closed_form() {
        // int_0^1 (1 - s^2)^4 s^2 ds = 128/3465
        let n = 20000;
        let h = 1.0 / n as f64;
        let s: f64 = (0..n)
            .map(|k| {
                let x = (k as f64 + 0.5) * h;
                (1.0 - x * x).powi(4) * x * x * h
            })
            .sum();
        assert!((s - 128.0 / 3465.0).abs() < 1e-9);
    }

    #[test]
    fn dipole_is_nonnegative_when_amplitude_dominates() {
        let src = SourceSpec::oscillatory_dipole([0.0, 0.0, 1.0], 1.0);
        assert!(src.find_negative().is_none());
        let bad = SourceSpec::oscillatory_dipole([0.0, 0.0, 1.0], 0.5);
        assert!(bad.find_negative().is_some());
    }

    #[test]
    fn json_shape() {
        let src = SourceSpec::oscillatory_dipole([0.0, 0.0, 1.0], 2.0);
        let v = serde_json::to_value(&src).unwrap();
        assert_eq!(v["kind"], "oscillatory-dipole");
        assert_eq!(v["smoothingRadius"], 1.0);
        let back: SourceSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, src);
        assert!(serde_json::from_str::<SourceSpec>(r#"{"kind":"zero","x":1}"#).is_err());
        let custom: SourceSpec =
            serde_json::from_str(r#"{"kind":"custom","radii":[1,2],"monopole":[1,0.5]}"#).unwrap();
        assert!(custom.validate().is_empty());
    }
}
