//! Univariate profiles: the C^4 smooth step and the radial modulation phi(t).

use serde::{Deserialize, Serialize};
use std::f64::consts::E;

/// C^4 step from 0 at `s <= 0` to 1 at `s >= 1`, with first and second
/// derivatives in `s`.
pub fn smoothstep(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [0.0; 3];
    }
    if s >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let t = 1.0 - s;
    let v = s.powi(5) * (126.0 + s * (-420.0 + s * (540.0 + s * (-315.0 + s * 70.0))));
    let d1 = 630.0 * s.powi(4) * t.powi(4);
    let d2 = 2520.0 * s.powi(3) * t.powi(3) * (1.0 - 2.0 * s);
    [v, d1, d2]
}

/// Smooth step rising over `[a, b]`, derivatives in `t`.
pub fn ramp(t: f64, a: f64, b: f64) -> [f64; 3] {
    let w = b - a;
    let [v, d1, d2] = smoothstep((t - a) / w);
    [v, d1 / w, d2 / (w * w)]
}

/// Blends `f` (value, first, second derivative) into the constant `c` with
/// weight `chi`: `chi f + (1 - chi) c`.
pub fn blend(chi: [f64; 3], f: [f64; 3], c: f64) -> [f64; 3] {
    let diff = f[0] - c;
    [
        chi[0] * f[0] + (1.0 - chi[0]) * c,
        chi[1] * diff + chi[0] * f[1],
        chi[2] * diff + 2.0 * chi[1] * f[1] + chi[0] * f[2],
    ]
}

/// Shape of the modulation `phi(t)` used for large `t`.
#[derive(Debug, Clone, PartialEq)]
pub enum PhiProfile {
    Constant {
        value: f64,
    },
    SinLog {
        amplitude: f64,
    },
    SinLogLog {
        amplitude: f64,
    },
    /// Samples `(t_i, phi_i)` smoothed by a Gaussian kernel in `log t`.
    TabulatedSmooth {
        t: Vec<f64>,
        values: Vec<f64>,
        /// Kernel width in `log t`; defaults to the mean sample spacing.
        bandwidth: Option<f64>,
    },
}

fn default_t0() -> f64 {
    E
}

/// Radial modulation `phi(t)`: the profile for `t >= t0`, a C^4 blend to the
/// constant `phi(t0)` over `[t0/2, t0]`, constant below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PhiJson", into = "PhiJson")]
pub struct PhiSpec {
    pub profile: PhiProfile,
    pub t0: f64,
}

/// JSON form: `{"kind": "sin-log", "amplitude": 1.0, "t0": 2.718...}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhiJson {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bandwidth: Option<f64>,
    #[serde(default = "default_t0")]
    t0: f64,
}

impl TryFrom<PhiJson> for PhiSpec {
    type Error = String;

    fn try_from(j: PhiJson) -> Result<Self, String> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| format!("phi.{name}: required for kind '{}'", j.kind))
        };
        let profile = match j.kind.as_str() {
            "constant" => PhiProfile::Constant {
                value: need(j.value, "value")?,
            },
            "sin-log" => PhiProfile::SinLog {
                amplitude: need(j.amplitude, "amplitude")?,
            },
            "sin-log-log" => PhiProfile::SinLogLog {
                amplitude: need(j.amplitude, "amplitude")?,
            },
            "tabulated-smooth" => PhiProfile::TabulatedSmooth {
                t: j.t.clone().ok_or("phi.t: required for kind 'tabulated-smooth'")?,
                values: j
                    .values
                    .clone()
                    .ok_or("phi.values: required for kind 'tabulated-smooth'")?,
                bandwidth: j.bandwidth,
            },
            other => {
                return Err(format!(
                    "phi.kind: unknown kind '{other}' (one of constant, sin-log, sin-log-log, tabulated-smooth)"
                ))
            }
        };
        let spec = PhiSpec { profile, t0: j.t0 };
        let errs = spec.validate();
        if errs.is_empty() {
            Ok(spec)
        } else {
            Err(errs.join("; "))
        }
    }
}

impl From<PhiSpec> for PhiJson {
    fn from(p: PhiSpec) -> Self {
        let mut j = PhiJson {
            t0: p.t0,
            ..Default::default()
        };
        j.kind = match p.profile {
            PhiProfile::Constant { value } => {
                j.value = Some(value);
                "constant"
            }
            PhiProfile::SinLog { amplitude } => {
                j.amplitude = Some(amplitude);
                "sin-log"
            }
            PhiProfile::SinLogLog { amplitude } => {
                j.amplitude = Some(amplitude);
                "sin-log-log"
            }
            PhiProfile::TabulatedSmooth {
                t,
                values,
                bandwidth,
            } => {
                j.t = Some(t);
                j.values = Some(values);
                j.bandwidth = bandwidth;
                "tabulated-smooth"
            }
        }
        .to_string();
        j
    }
}

impl PhiSpec {
    pub fn sin_log(amplitude: f64) -> Self {
        Self {
            profile: PhiProfile::SinLog { amplitude },
            t0: E,
        }
    }

    pub fn sin_log_log(amplitude: f64) -> Self {
        Self {
            profile: PhiProfile::SinLogLog { amplitude },
            t0: E,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            profile: PhiProfile::Constant { value },
            t0: E,
        }
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if !(self.t0 > 0.0 && self.t0.is_finite()) {
            errs.push(format!("phi.t0: must be positive, got {}", self.t0));
        }
        match &self.profile {
            PhiProfile::SinLogLog { .. } if self.t0 <= 2.0 => {
                errs.push("phi.t0: sin-log-log needs t0 > 2".to_string())
            }
            PhiProfile::TabulatedSmooth {
                t,
                values,
                bandwidth,
            } => {
                if t.len() != values.len() || t.len() < 2 {
                    errs.push("phi.values: need at least two samples matching phi.t".into());
                }
                if t.iter().any(|x| *x <= 0.0) || !t.windows(2).all(|w| w[0] < w[1]) {
                    errs.push("phi.t: must be positive and strictly increasing".into());
                }
                if let Some(bw) = bandwidth {
                    if *bw <= 0.0 {
                        errs.push("phi.bandwidth: must be positive".into());
                    }
                }
            }
            _ => {}
        }
        errs
    }

    fn raw(&self, t: f64) -> [f64; 3] {
        match &self.profile {
            PhiProfile::Constant { value } => [*value, 0.0, 0.0],
            PhiProfile::SinLog { amplitude: a } => {
                let (s, c) = t.ln().sin_cos();
                [a * s, a * c / t, -a * (s + c) / (t * t)]
            }
            PhiProfile::SinLogLog { amplitude: a } => {
                let l = t.ln();
                let (s, c) = l.ln().sin_cos();
                let ts = t * l;
                [a * s, a * c / ts, -a * (s + c * (l + 1.0)) / (ts * ts)]
            }
            PhiProfile::TabulatedSmooth {
                t: ts,
                values,
                bandwidth,
            } => kernel_smooth(ts, values, *bandwidth, t),
        }
    }

    /// `phi`, `phi'`, `phi''` at `t > 0`.
    pub fn eval(&self, t: f64) -> [f64; 3] {
        let t0 = self.t0;
        if t >= t0 {
            return self.raw(t);
        }
        let c = self.raw(t0)[0];
        if t <= 0.5 * t0 {
            return [c, 0.0, 0.0];
        }
        blend(ramp(t, 0.5 * t0, t0), self.raw(t), c)
    }

    /// `3 phi(t) - t phi'(t)`, the quantity controlling the center of mass
    /// of the modulated dipole family.
    pub fn center_profile(&self, t: f64) -> f64 {
        let [p, d, _] = self.eval(t);
        3.0 * p - t * d
    }
}

/// Nadaraya-Watson smoother in `s = log t`, converted to `t` derivatives.
fn kernel_smooth(ts: &[f64], values: &[f64], bandwidth: Option<f64>, t: f64) -> [f64; 3] {
    let logs: Vec<f64> = ts.iter().map(|x| x.ln()).collect();
    let n = logs.len();
    let sigma = bandwidth.unwrap_or_else(|| (logs[n - 1] - logs[0]) / (n - 1) as f64);
    let s = t.ln();
    let expo: Vec<f64> = logs
        .iter()
        .map(|si| -(s - si) * (s - si) / (2.0 * sigma * sigma))
        .collect();
    let emax = expo.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut d0, mut d1, mut d2) = (0.0, 0.0, 0.0);
    let (mut n0, mut n1, mut n2) = (0.0, 0.0, 0.0);
    let s2 = sigma * sigma;
    for ((si, e), y) in logs.iter().zip(&expo).zip(values) {
        let w = (e - emax).exp();
        let dw = -(s - si) / s2 * w;
        let ddw = ((s - si) * (s - si) / (s2 * s2) - 1.0 / s2) * w;
        d0 += w;
        d1 += dw;
        d2 += ddw;
        n0 += w * y;
        n1 += dw * y;
        n2 += ddw * y;
    }
    let f = n0 / d0;
    let fs = (n1 * d0 - n0 * d1) / (d0 * d0);
    let fss = (n2 - 2.0 * fs * d1 - f * d2) / d0;
    [f, fs / t, (fss - fs) / (t * t)]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(phi: &PhiSpec, t: f64) {
        let h = 1e-5 * t;
        let [_, d1, d2] = phi.eval(t);
        let fp = phi.eval(t + h)[0];
        let fm = phi.eval(t - h)[0];
        let f0 = phi.eval(t)[0];
        let fd1 = (fp - fm) / (2.0 * h);
        let fd2 = (fp - 2.0 * f0 + fm) / (h * h);
        let scale = 1.0 + d1.abs() * t;
        assert!((fd1 - d1).abs() * t < 1e-7 * scale, "t={t}: {fd1} vs {d1}");
        assert!(
            (fd2 - d2).abs() * t * t < 1e-3 * (1.0 + d2.abs() * t * t),
            "t={t}: {fd2} vs {d2}"
        );
    }

    #[test]
    fn smoothstep_endpoints_and_derivatives() {
        assert_eq!(smoothstep(0.0), [0.0; 3]);
        assert_eq!(smoothstep(1.0), [1.0, 0.0, 0.0]);
        assert!((smoothstep(0.5)[0] - 0.5).abs() < 1e-15);
        for s in [0.1, 0.3, 0.77] {
            let h = 1e-6;
            let fd = (smoothstep(s + h)[0] - smoothstep(s - h)[0]) / (2.0 * h);
            assert!((fd - smoothstep(s)[1]).abs() < 1e-7);
            let fd2 = (smoothstep(s + h)[1] - smoothstep(s - h)[1]) / (2.0 * h);
            assert!((fd2 - smoothstep(s)[2]).abs() < 1e-6);
        }
    }

    #[test]
    fn profile_derivatives_match_finite_differences() {
        let tab = PhiSpec {
            profile: PhiProfile::TabulatedSmooth {
                t: (0..40).map(|k| 1.5f64.powi(k) + 0.5).collect(),
                values: (0..40).map(|k| (0.4 * k as f64).sin()).collect(),
                bandwidth: None,
            },
            t0: 3.0,
        };
        for phi in [
            PhiSpec::sin_log(1.0),
            PhiSpec::sin_log_log(0.7),
            PhiSpec::constant(2.0),
            tab,
        ] {
            for t in [1.6, 2.0, 2.5, 3.3, 7.0, 55.0, 900.0] {
                fd_check(&phi, t);
            }
        }
    }

    #[test]
    fn sin_log_center_profile() {
        let phi = PhiSpec::sin_log(1.0);
        let t = 4f64.exp();
        let expect = 3.0 * 4f64.sin() - 4f64.cos();
        assert!((phi.center_profile(t) - expect).abs() < 1e-13);
        // constant below t0/2
        assert_eq!(phi.eval(1.0), [1f64.sin(), 0.0, 0.0]);
    }

    /// |phi^(l)(t)| (1 + t)^l stays bounded for l = 0..4, sampled with nested
    /// central differences on a log grid.
    #[test]
    fn derivative_decay_bounds() {
        for phi in [PhiSpec::sin_log(1.0), PhiSpec::sin_log_log(1.0)] {
            let mut worst = [0.0f64; 5];
            for k in 0..60 {
                let t = 3.0 * 1.2f64.powi(k);
                let h = 0.02 * t;
                let f = |j: i32| phi.eval(t + j as f64 * h)[0];
                let d = [
                    f(0),
                    (f(1) - f(-1)) / (2.0 * h),
                    (f(1) - 2.0 * f(0) + f(-1)) / (h * h),
                    (f(2) - 2.0 * f(1) + 2.0 * f(-1) - f(-2)) / (2.0 * h.powi(3)),
                    (f(2) - 4.0 * f(1) + 6.0 * f(0) - 4.0 * f(-1) + f(-2)) / h.powi(4),
                ];
                for l in 0..5 {
                    worst[l] = worst[l].max(d[l].abs() * (1.0 + t).powi(l as i32));
                }
            }
            for w in worst {
                assert!(w < 200.0, "{worst:?}");
            }
        }
    }

    #[test]
    fn json_shape() {
        let phi: PhiSpec = serde_json::from_str(r#"{"kind":"sin-log","amplitude":1.0}"#).unwrap();
        assert_eq!(phi, PhiSpec::sin_log(1.0));
        assert!(
            serde_json::from_str::<PhiSpec>(r#"{"kind":"sin-log","amplitude":1,"x":2}"#).is_err()
        );
        assert!(serde_json::from_str::<PhiSpec>(r#"{"kind":"sin-log"}"#).is_err());
        let back: PhiSpec = serde_json::from_str(&serde_json::to_string(&phi).unwrap()).unwrap();
        assert_eq!(back, phi);
    }
}
