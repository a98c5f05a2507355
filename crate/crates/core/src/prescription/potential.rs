use super::source::{Density, SourceSpec};
use crate::error::Result;
use crate::geometry::{ramp, Vec3};
use crate::quadrature::{
    check_decay, gauss_on, integrate_annulus_n, integrate_r3_decaying, integrate_sphere,
    pairwise_sum, sampled_decay_constants, DecayingIntegral, RadialRule, SphereRule,
};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Quadrature settings for free-space potentials.
#[derive(Debug, Clone)]
pub struct PotentialControls {
    /// Rule on spheres centered at the evaluation point.
    pub near: SphereRule,
    /// Rule on spheres centered at the origin, pole aligned with the
    /// evaluation point.
    pub far: SphereRule,
    pub radial: RadialRule,
    /// Outer radius of the quadrature; the rest is bounded analytically.
    pub r_cut: f64,
}

impl Default for PotentialControls {
    fn default() -> Self {
        Self {
            near: SphereRule::new(32),
            far: SphereRule::new(48),
            radial: RadialRule::default(),
            r_cut: 1e4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialValue {
    pub value: f64,
    /// Quadrature error estimate plus the tail bound.
    pub error: f64,
    pub tail_bound: f64,
}

/// Orthonormal frame whose third vector is `x / |x|`.
fn frame(x: &Vec3) -> [Vec3; 3] {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    if r == 0.0 {
        return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    }
    let e3 = [x[0] / r, x[1] / r, x[2] / r];
    let helper = if e3[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let d = helper[0] * e3[0] + helper[1] * e3[1] + helper[2] * e3[2];
    let mut e1 = [
        helper[0] - d * e3[0],
        helper[1] - d * e3[1],
        helper[2] - d * e3[2],
    ];
    let n1 = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1.iter_mut().for_each(|c| *c /= n1);
    let e2 = [
        e3[1] * e1[2] - e3[2] * e1[1],
        e3[2] * e1[0] - e3[0] * e1[2],
        e3[0] * e1[1] - e3[1] * e1[0],
    ];
    [e1, e2, e3]
}

/// Origin-centered shells with the pole along `x`. On each shell the
/// colatitude is traded for the distance `d` to `x`, which cancels the
/// `1/d` of the kernel, and the `d` range is split where the cutoff starts
/// and ends.
struct FarShells {
    rx: f64,
    rho: f64,
    frame: [Vec3; 3],
}

impl FarShells {
    fn shell<F: Fn([f64; 3]) -> f64>(&self, g: &F, s: f64, degree: usize) -> f64 {
        let n_t = degree / 2 + 1;
        let n_p = degree + 1;
        let [e1, e2, e3] = self.frame;
        let dphi = 2.0 * PI / n_p as f64;
        let ring = |u: f64| {
            let st = (1.0 - u * u).max(0.0).sqrt();
            let mut acc = 0.0;
            for k in 0..n_p {
                let (sp, cp) = (dphi * k as f64).sin_cos();
                let p = [st * cp, st * sp, u];
                acc += g([
                    s * (p[0] * e1[0] + p[1] * e2[0] + p[2] * e3[0]),
                    s * (p[0] * e1[1] + p[1] * e2[1] + p[2] * e3[1]),
                    s * (p[0] * e1[2] + p[1] * e2[2] + p[2] * e3[2]),
                ]);
            }
            acc * dphi
        };
        let mut total = 0.0;
        if self.rx == 0.0 {
            let (us, ws) = gauss_on(-1.0, 1.0, n_t);
            for (u, w) in us.iter().zip(&ws) {
                total += w * ring(*u);
            }
            return total * s * s;
        }
        // u = cos(theta) = (s^2 + rx^2 - d^2) / (2 s rx), du = -d dd / (s rx)
        let (lo, hi) = ((s - self.rx).abs().max(0.25 * self.rho), s + self.rx);
        let mut cuts = vec![lo];
        if self.rho > lo && self.rho < hi {
            cuts.push(self.rho);
        }
        cuts.push(hi);
        let jac = 1.0 / (s * self.rx);
        for seg in cuts.windows(2) {
            if seg[1] <= seg[0] {
                continue;
            }
            let (ds, ws) = gauss_on(seg[0], seg[1], n_t);
            for (d, w) in ds.iter().zip(&ws) {
                let u = ((s * s + self.rx * self.rx - d * d) * 0.5 * jac).clamp(-1.0, 1.0);
                total += w * d * jac * ring(u);
            }
        }
        total * s * s
    }

    fn integrate<F: Fn([f64; 3]) -> f64 + Sync>(
        &self,
        g: &F,
        s: &[f64],
        w: &[f64],
        degree: usize,
    ) -> f64 {
        let terms: Vec<f64> = s
            .par_iter()
            .zip(w.par_iter())
            .map(|(si, wi)| wi * self.shell(g, *si, degree))
            .collect();
        pairwise_sum(&terms)
    }
}

/// Radius of the ball around `x` integrated in centered coordinates: half of
/// `max(|x|, 1)`, shrunk to stay clear of spheres where the source is not
/// smooth, but never below a tenth of `max(|x|, 1)`.
fn split_radius(rx: f64, breakpoints: &[f64]) -> f64 {
    let scale = rx.max(1.0);
    let gap = breakpoints
        .iter()
        .map(|b| (rx - b).abs())
        .fold(f64::INFINITY, f64::min);
    if gap >= 0.1 * scale {
        (0.5 * scale).min(gap)
    } else {
        0.5 * scale
    }
}

/// `v(x) = -1/(4 pi) int f(y) / |x - y| dy`, the decaying solution of
/// `Lap v = f`.
///
/// A smooth cutoff splits the integral into a ball around `x`, done in
/// spherical coordinates centered at `x` where `dy / |x - y|` is bounded,
/// and the rest, done in origin-centered coordinates up to `r_cut` with an
/// explicit bound on what lies beyond.
pub fn newtonian_potential<D: Density + ?Sized>(
    f: &D,
    x: &Vec3,
    ctl: &PotentialControls,
) -> Result<PotentialValue> {
    let rx = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let bps = f.breakpoints();
    let rho = split_radius(rx, &bps);
    let outer = |d: f64| ramp(d, 0.25 * rho, rho)[0];

    let near = integrate_annulus_n(
        |z| {
            let d = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt();
            let y = [x[0] + z[0], x[1] + z[1], x[2] + z[2]];
            [f.density(&y) * (1.0 - outer(d)) / d]
        },
        0.0,
        rho,
        &ctl.near,
        &ctl.radial,
        &[0.25 * rho],
    );

    let mut far_bps = bps.clone();
    far_bps.extend([rx - rho, rx - 0.25 * rho, rx + 0.25 * rho, rx + rho]);
    far_bps.retain(|b| *b > 0.0);
    let r_cut = ctl.r_cut.max(4.0 * (rx + rho));
    let q = f.decay_order() + 1.0;
    let far_integrand = |y: [f64; 3]| {
        let d = ((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2) + (y[2] - x[2]).powi(2)).sqrt();
        let w = outer(d);
        if w == 0.0 {
            0.0
        } else {
            f.density(&y) * w / d
        }
    };
    let samples = sampled_decay_constants(&far_integrand, r_cut, q, &ctl.far);
    check_decay(&samples)?;
    let c = samples.iter().copied().fold(0.0, f64::max);
    let far_tail = c * 4.0 * PI / ((q - 3.0) * r_cut.powf(q - 3.0));
    let shells = FarShells {
        rx,
        rho,
        frame: frame(x),
    };
    let degree = ctl.far.degree();
    let (s, w) = ctl.radial.nodes(0.0, r_cut, &far_bps);
    let far = shells.integrate(&far_integrand, &s, &w, degree);
    let (sc, wc) = ctl.radial.coarsened().nodes(0.0, r_cut, &far_bps);
    let far_coarse = shells.integrate(&far_integrand, &sc, &wc, degree / 2);

    // Beyond r_cut: 1/|x - y| ~ 1/|y| and the shell at r_cut continued with
    // the declared decay.
    let shell = integrate_sphere(|y| f.density(&y), r_cut, &ctl.far).scalar();
    let far = far + shell / (q - 3.0);

    let k = -1.0 / (4.0 * PI);
    let tail_bound = far_tail / (4.0 * PI);
    Ok(PotentialValue {
        value: k * (near.value[0] + far),
        error: (near.error[0] + (far - far_coarse).abs()) / (4.0 * PI) + tail_bound,
        tail_bound,
    })
}

/// `int f dv_0` with the part beyond `r_cut` modelled as the shell at `r_cut`
/// continued with the declared decay.
pub fn source_integral<D: Density + ?Sized>(
    f: &D,
    ctl: &PotentialControls,
) -> Result<DecayingIntegral> {
    let q = f.decay_order();
    let mut est = integrate_r3_decaying(
        |y| f.density(&y),
        ctl.r_cut,
        q,
        &ctl.far,
        &ctl.radial,
        &f.breakpoints(),
    )?;
    let shell = integrate_sphere(|y| f.density(&y), ctl.r_cut, &ctl.far).scalar();
    est.value += shell * ctl.r_cut / (q - 3.0);
    Ok(est)
}

/// Mass `m = -1/(2 pi) int f dv_0` of the potential `v ~ m / (2|x|)`.
pub fn mass_from_source<D: Density + ?Sized>(f: &D, ctl: &PotentialControls) -> Result<f64> {
    Ok(-source_integral(f, ctl)?.value / (2.0 * PI))
}

/// `int_{B(r)} x^alpha f dv_0`, split into the unit ball and the annulus
/// `1 < |x| < r`.
pub fn first_moment<D: Density + ?Sized>(
    f: &D,
    r: f64,
    alpha: usize,
    ctl: &PotentialControls,
) -> f64 {
    let bps = f.breakpoints();
    let g = |y: [f64; 3]| [y[alpha] * f.density(&y)];
    if r <= 1.0 {
        return integrate_annulus_n(g, 0.0, r, &ctl.near, &ctl.radial, &bps).value[0];
    }
    let inner = integrate_annulus_n(g, 0.0, 1.0, &ctl.near, &ctl.radial, &bps).value[0];
    inner + integrate_annulus_n(g, 1.0, r, &ctl.near, &ctl.radial, &bps).value[0]
}

/// Newtonian potential of a fixed source, with its mass extracted once.
#[derive(Debug, Clone)]
pub struct PotentialField {
    source: SourceSpec,
    controls: PotentialControls,
    mass: f64,
    mass_error: f64,
}

impl PotentialField {
    pub fn new(source: SourceSpec, controls: PotentialControls) -> Result<Self> {
        source.check()?;
        let integral = source_integral(&source, &controls)?;
        Ok(Self {
            mass: -integral.value / (2.0 * PI),
            mass_error: (integral.error + integral.tail_bound) / (2.0 * PI),
            source,
            controls,
        })
    }

    pub fn source(&self) -> &SourceSpec {
        &self.source
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn mass_error(&self) -> f64 {
        self.mass_error
    }

    pub fn value(&self, x: &Vec3) -> Result<PotentialValue> {
        newtonian_potential(&self.source, x, &self.controls)
    }

    /// `v(x) - m / (2|x|)`.
    pub fn remainder(&self, x: &Vec3) -> Result<f64> {
        let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        Ok(self.value(x)?.value - self.mass / (2.0 * r))
    }

    /// Fourth-order central-difference Laplacian with step `h`.
    pub fn laplacian_fd(&self, x: &Vec3, h: f64) -> Result<f64> {
        let v0 = self.value(x)?.value;
        let mut lap = 0.0;
        for a in 0..3 {
            let at = |s: f64| {
                let mut p = *x;
                p[a] += s;
                self.value(&p).map(|v| v.value)
            };
            let (p1, m1, p2, m2) = (at(h)?, at(-h)?, at(2.0 * h)?, at(-2.0 * h)?);
            lap += (-p2 + 16.0 * p1 - 30.0 * v0 + 16.0 * m1 - m2) / (12.0 * h * h);
        }
        Ok(lap)
    }
}
