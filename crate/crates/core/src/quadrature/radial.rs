use super::gauss::{gauss_on, pairwise_sum_n};
use super::sphere::{Estimate, NodeSet, SphereRule};
use crate::error::{Error, Result};
use rayon::prelude::*;
use std::f64::consts::PI;

/// Composite Gauss rule on geometric radial panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialRule {
    /// Maximum ratio between the outer and inner radius of a panel.
    pub ratio: f64,
    /// Gauss nodes per panel.
    pub nodes_per_panel: usize,
}

impl Default for RadialRule {
    fn default() -> Self {
        Self {
            ratio: 2f64.powf(0.25),
            nodes_per_panel: 8,
        }
    }
}

impl RadialRule {
    pub fn new(ratio: f64, nodes_per_panel: usize) -> Self {
        assert!(ratio > 1.0 && nodes_per_panel > 0);
        Self {
            ratio,
            nodes_per_panel,
        }
    }

    /// Same panels, half the nodes per panel.
    pub fn coarsened(&self) -> Self {
        Self {
            ratio: self.ratio,
            nodes_per_panel: (self.nodes_per_panel / 2).max(2),
        }
    }

    /// Doubles the panel count and the nodes per panel.
    pub fn refined(&self) -> Self {
        Self {
            ratio: self.ratio.sqrt(),
            nodes_per_panel: self.nodes_per_panel * 2,
        }
    }

    /// Panel boundaries covering `[a, b]`, split at every breakpoint inside.
    /// A segment starting at zero gets a uniform first panel
    /// `[0, min(c, 1)/8]` followed by geometric panels.
    pub fn panels(&self, a: f64, b: f64, breakpoints: &[f64]) -> Vec<(f64, f64)> {
        assert!(0.0 <= a && a < b, "bad interval [{a}, {b}]");
        let mut cuts: Vec<f64> = vec![a];
        let mut bps: Vec<f64> = breakpoints
            .iter()
            .copied()
            .filter(|&p| p > a * (1.0 + 1e-12) && p < b * (1.0 - 1e-12))
            .collect();
        bps.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.extend(bps);
        cuts.push(b);
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mut start = lo;
            if lo == 0.0 {
                let inner = hi.min(1.0) / 8.0;
                out.push((0.0, inner));
                start = inner;
            }
            let n = ((hi / start).ln() / self.ratio.ln()).ceil().max(1.0) as usize;
            let q = (hi / start).powf(1.0 / n as f64);
            let mut r0 = start;
            for k in 0..n {
                let r1 = if k + 1 == n { hi } else { r0 * q };
                out.push((r0, r1));
                r0 = r1;
            }
        }
        out
    }

    /// Flattened radial nodes and weights (for `ds`, no `s^2` factor).
    pub fn nodes(&self, a: f64, b: f64, breakpoints: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut s = Vec::new();
        let mut w = Vec::new();
        for (lo, hi) in self.panels(a, b, breakpoints) {
            let (x, wx) = gauss_on(lo, hi, self.nodes_per_panel);
            s.extend(x);
            w.extend(wx);
        }
        (s, w)
    }
}

fn integrate_volume<const N: usize, F>(
    f: &F,
    radii: &[f64],
    rweights: &[f64],
    sphere: &NodeSet,
) -> [f64; N]
where
    F: Fn([f64; 3]) -> [f64; N] + Sync,
{
    let shells: Vec<[f64; N]> = radii
        .par_iter()
        .zip(rweights.par_iter())
        .map(|(&s, &ws)| {
            let terms: Vec<[f64; N]> = sphere
                .nodes
                .iter()
                .zip(&sphere.weights)
                .map(|(z, wz)| {
                    let mut v = f([s * z[0], s * z[1], s * z[2]]);
                    for c in v.iter_mut() {
                        *c *= wz * ws * s * s;
                    }
                    v
                })
                .collect();
            pairwise_sum_n(&terms)
        })
        .collect();
    pairwise_sum_n(&shells)
}

/// `int_{rin < |x| < rout} f dv_0`, vector valued, with panels split at the
/// given breakpoints. The error estimate compares against a rule with half
/// the sphere degree and half the Gauss nodes per panel.
pub fn integrate_annulus_n<const N: usize, F>(
    f: F,
    rin: f64,
    rout: f64,
    sphere: &SphereRule,
    radial: &RadialRule,
    breakpoints: &[f64],
) -> Estimate<N>
where
    F: Fn([f64; 3]) -> [f64; N] + Sync,
{
    let (s, w) = radial.nodes(rin, rout, breakpoints);
    let value = integrate_volume(&f, &s, &w, sphere.fine());
    let coarse_radial = radial.coarsened();
    let (sc, wc) = coarse_radial.nodes(rin, rout, breakpoints);
    let coarse = integrate_volume(&f, &sc, &wc, sphere.coarse());
    let mut error = [0.0; N];
    for k in 0..N {
        error[k] = (value[k] - coarse[k]).abs();
    }
    Estimate { value, error }
}

/// `int_{rin < |x| < rout} f dv_0`.
pub fn integrate_annulus<F>(
    f: F,
    rin: f64,
    rout: f64,
    sphere: &SphereRule,
    radial: &RadialRule,
) -> Estimate<1>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    integrate_annulus_n(|x| [f(x)], rin, rout, sphere, radial, &[])
}

/// Integral over all of space of a field decaying like `r^-q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayingIntegral {
    /// Quadrature over the ball `|x| < rcut`.
    pub value: f64,
    /// Quadrature error estimate for `value`.
    pub error: f64,
    /// Bound on the neglected integral over `|x| > rcut`.
    pub tail_bound: f64,
    /// Sampled constant `C` in `|f| <= C r^-q` beyond `rcut`.
    pub decay_constant: f64,
}

/// Samples `sup r^q |f|` on spheres `rcut * 2^k`, `k = 0..=4`.
pub fn sampled_decay_constants<F>(f: &F, rcut: f64, q: f64, rule: &SphereRule) -> Vec<f64>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    (0..=4)
        .map(|k| {
            let r = rcut * 2f64.powi(k);
            rule.coarse()
                .nodes
                .iter()
                .map(|z| f([r * z[0], r * z[1], r * z[2]]).abs() * r.powf(q))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `int_{R^3} f dv_0` for `|f| <= C r^-q`, `q > 3`: quadrature over
/// `B(rcut)` plus an explicit bound `C 4 pi / ((q - 3) rcut^(q - 3))` on the
/// remainder.
pub fn integrate_r3_decaying<F>(
    f: F,
    rcut: f64,
    q: f64,
    sphere: &SphereRule,
    radial: &RadialRule,
    breakpoints: &[f64],
) -> Result<DecayingIntegral>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    if q <= 3.0 {
        return Err(Error::InvalidSpec(format!(
            "decay order {q} is not integrable in three dimensions"
        )));
    }
    let samples = sampled_decay_constants(&f, rcut, q, sphere);
    check_decay(&samples)?;
    let c = samples.iter().copied().fold(0.0, f64::max);
    let est = integrate_annulus_n(|x| [f(x)], 0.0, rcut, sphere, radial, breakpoints);
    Ok(DecayingIntegral {
        value: est.value[0],
        error: est.error[0],
        tail_bound: c * 4.0 * PI / ((q - 3.0) * rcut.powf(q - 3.0)),
        decay_constant: c,
    })
}

/// Rejects sampled `r^q |f|` sequences that keep growing.
pub fn check_decay(samples: &[f64]) -> Result<()> {
    let first = samples[0];
    let last = *samples.last().unwrap();
    let increasing = samples.windows(2).all(|w| w[1] >= w[0]);
    if increasing && last > 2.0 * first && last > 1e-300 {
        return Err(Error::TailNotDecaying {
            from: first,
            to: last,
        });
    }
    Ok(())
}
