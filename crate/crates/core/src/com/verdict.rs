//! Classification of a radius-indexed series as convergent, oscillating in
//! `log r`, or neither.

use super::series::ComSeries;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const MIN_SAMPLES: usize = 8;
/// Minimum span of the grid in `log r`.
pub const MIN_LOG_SPAN: f64 = 2.0;
const OMEGA_RANGE: (f64, f64) = (0.2, 5.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum LimitVerdict {
    Converged {
        value: Vec3,
        #[serde(rename = "errorBar")]
        error_bar: f64,
    },
    Oscillating {
        value: Vec3,
        amplitude: Vec3,
        #[serde(rename = "logPeriod")]
        log_period: f64,
    },
    Inconclusive {
        reason: String,
    },
}

impl LimitVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Converged { .. } => "Converged",
            Self::Oscillating { .. } => "Oscillating",
            Self::Inconclusive { .. } => "Inconclusive",
        }
    }
}

/// Best fit `c0 + A sin(omega t + theta)` per component with a shared
/// frequency, `t = log r`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinusoidFit {
    pub omega: f64,
    pub center: Vec3,
    pub amplitude: Vec3,
    pub phase: Vec3,
    /// Root-mean-square residual over all samples and components.
    pub rms: f64,
    /// Whether the `1/r` remainder terms were part of the model.
    pub tail: bool,
}

fn inf_dist(a: &Vec3, b: &Vec3) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max)
}

fn inf_norm(a: &Vec3) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Cauchy test on the upper half of the samples: returns the spread when it
/// is within `3 err + 0.01 max(1, |c|)`.
fn cauchy(values: &[Vec3], err: f64) -> Option<f64> {
    let top = &values[values.len() / 2..];
    let mut spread: f64 = 0.0;
    for (i, a) in top.iter().enumerate() {
        for b in &top[i + 1..] {
            spread = spread.max(inf_dist(a, b));
        }
    }
    let scale = inf_norm(top.last().unwrap()).max(1.0);
    (spread <= 3.0 * err + 0.01 * scale).then_some(spread)
}

/// Removes a `B/r` tail: `(r_k c_k - r_{k-1} c_{k-1}) / (r_k - r_{k-1})`.
fn richardson(radii: &[f64], values: &[Vec3]) -> Vec<Vec3> {
    (1..radii.len())
        .map(|k| {
            let (r0, r1) = (radii[k - 1], radii[k]);
            let mut d = [0.0; 3];
            for (a, da) in d.iter_mut().enumerate() {
                *da = (r1 * values[k][a] - r0 * values[k - 1][a]) / (r1 - r0);
            }
            d
        })
        .collect()
}

/// Below this many samples the fit omits the `1/r` remainder terms.
pub const TAIL_FIT_MIN_SAMPLES: usize = 16;

fn design(t: &[f64], omega: f64, tail: bool) -> DMatrix<f64> {
    let cols = if tail { 6 } else { 3 };
    DMatrix::from_fn(t.len(), cols, |i, j| {
        let (s, c) = (omega * t[i]).sin_cos();
        let decay = (-t[i]).exp();
        match j {
            0 => 1.0,
            1 => s,
            2 => c,
            3 => decay,
            4 => decay * s,
            _ => decay * c,
        }
    })
}

fn fit_at(t: &[f64], values: &[Vec3], omega: f64, tail: bool) -> (f64, Vec<DVector<f64>>) {
    let a = design(t, omega, tail);
    let svd = a.clone().svd(true, true);
    let mut ss = 0.0;
    let mut coef = Vec::with_capacity(3);
    for k in 0..3 {
        let y = DVector::from_iterator(t.len(), values.iter().map(|v| v[k]));
        let c = svd
            .solve(&y, 1e-13)
            .unwrap_or_else(|_| DVector::zeros(a.ncols()));
        ss += (&y - &a * &c).norm_squared();
        coef.push(c);
    }
    (ss, coef)
}

/// Least-squares fit of `c0 + A sin(omega t + theta)` per component with a
/// shared frequency, `t = log r`. With enough samples the model also carries
/// a remainder `(B0 + B1 sin(omega t) + B2 cos(omega t)) / r`. The frequency
/// is located on a log grid over `[0.2, 5]` and polished by golden section.
pub fn fit_sinusoid(radii: &[f64], values: &[Vec3]) -> SinusoidFit {
    let t: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let tail = t.len() >= TAIL_FIT_MIN_SAMPLES;
    let (lo, hi) = OMEGA_RANGE;
    let n = 400;
    let grid: Vec<f64> = (0..=n)
        .map(|k| lo * (hi / lo).powf(k as f64 / n as f64))
        .collect();
    let f = |w: f64| fit_at(&t, values, w, tail).0;
    let ss: Vec<f64> = grid.iter().map(|w| f(*w)).collect();
    let best = (0..=n).min_by(|a, b| ss[*a].total_cmp(&ss[*b])).unwrap();
    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(n)]);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let omega = if fc < fd { c } else { d };
    let (ss, coef) = fit_at(&t, values, omega, tail);
    let mut center = [0.0; 3];
    let mut amplitude = [0.0; 3];
    let mut phase = [0.0; 3];
    for k in 0..3 {
        center[k] = coef[k][0];
        amplitude[k] = coef[k][1].hypot(coef[k][2]);
        phase[k] = coef[k][2].atan2(coef[k][1]);
    }
    SinusoidFit {
        omega,
        center,
        amplitude,
        phase,
        rms: (ss / (3 * t.len()) as f64).sqrt(),
        tail,
    }
}

/// Classifies the large-`r` behavior of `series`.
///
/// Converged when the upper half of the samples (or of their `1/r`
/// extrapolation) agrees to within three quadrature errors plus
/// `0.01 max(1, |c|)`. Otherwise Oscillating when a single-frequency
/// sinusoid in `log r` fits with residual below 10% of the amplitude, the
/// amplitude exceeds five times the quadrature noise and the fitted
/// frequency is interior to the search range. Otherwise Inconclusive.
pub fn limit_verdict(series: &ComSeries) -> Result<LimitVerdict> {
    let n = series.len();
    let span = if n > 1 {
        (series.radii[n - 1] / series.radii[0]).ln()
    } else {
        0.0
    };
    if n < MIN_SAMPLES || span < MIN_LOG_SPAN {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: n,
            span: MIN_LOG_SPAN,
        });
    }
    let err = series.errors[n / 2..]
        .iter()
        .map(inf_norm)
        .fold(0.0, f64::max);
    if let Some(spread) = cauchy(&series.values, err) {
        return Ok(LimitVerdict::Converged {
            value: series.values[n - 1],
            error_bar: spread,
        });
    }
    let extrapolated = richardson(&series.radii, &series.values);
    if let Some(spread) = cauchy(&extrapolated, 2.0 * err) {
        return Ok(LimitVerdict::Converged {
            value: *extrapolated.last().unwrap(),
            error_bar: spread,
        });
    }
    let fit = fit_sinusoid(&series.radii, &series.values);
    let amp = fit.amplitude.iter().map(|a| a * a).sum::<f64>().sqrt();
    let noise = series.errors.iter().map(inf_norm).fold(0.0, f64::max);
    let (lo, hi) = OMEGA_RANGE;
    let interior = fit.omega > lo * 1.02 && fit.omega < hi / 1.02;
    if fit.rms < 0.1 * amp && amp > 5.0 * noise && interior {
        return Ok(LimitVerdict::Oscillating {
            value: fit.center,
            amplitude: fit.amplitude,
            log_period: 2.0 * PI / fit.omega,
        });
    }
    let reason = if !interior {
        format!(
            "no convergence; best log-frequency {:.3} is at the edge of [{lo}, {hi}]",
            fit.omega
        )
    } else if fit.rms >= 0.1 * amp {
        format!(
            "no convergence; sinusoid residual {:.3e} exceeds 10% of amplitude {:.3e}",
            fit.rms, amp
        )
    } else {
        format!("no convergence; amplitude {amp:.3e} below five times noise {noise:.3e}")
    };
    Ok(LimitVerdict::Inconclusive { reason })
}
