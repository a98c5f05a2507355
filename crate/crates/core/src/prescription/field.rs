//! Potentials stored as radial profiles of spherical-harmonic coefficients.
//!
//! The source `f` is tabulated as coefficients `f_lm(s)` at Gauss nodes of
//! radial panels. The potential with `Lap v = f` and `v -> 0` is evaluated
//! per harmonic from
//!
//! `v_lm(r) = -1/(2l+1) [ r^-(l+1) int_0^r s^(l+2) f_lm ds + r^l int_r^inf s^(1-l) f_lm ds ]`
//!
//! with `f_lm` interpolated inside each panel and continued as `r^-4` beyond
//! the last panel.

use crate::harmonics::{count, degree_order, HarmonicBasis};
use crate::jet::{norm, Scalar};
use crate::quadrature::{gauss_legendre, RadialRule};
use serde::{Deserialize, Serialize};

const SUB_NODES: usize = 12;
const TAIL_POWER: i32 = 4;

/// Serialized content of a [`RadialHarmonicField`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FieldData {
    pub lmax: usize,
    pub panels: Vec<[f64; 2]>,
    pub nodes_per_panel: usize,
    /// `source[k][idx]`: coefficient `idx` of the source at radial node `k`.
    pub source: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "FieldData", into = "FieldData")]
pub struct RadialHarmonicField {
    data: FieldData,
    basis: HarmonicBasis,
    ref_nodes: Vec<f64>,
    bary: Vec<f64>,
    sub_x: Vec<f64>,
    sub_w: Vec<f64>,
    /// `cum_in[p][idx] = int_0^{a_p} s^(l+2) f_lm`.
    cum_in: Vec<Vec<f64>>,
    /// `cum_out[p][idx] = int_{b_p}^inf s^(1-l) f_lm`.
    cum_out: Vec<Vec<f64>>,
    /// `int_0^rmax s^(l+2) f_lm`.
    full_in: Vec<f64>,
    /// `f_lm` at the outer end of the grid.
    edge: Vec<f64>,
}

impl PartialEq for RadialHarmonicField {
    fn eq(&self, other: &Self) -> bool {
        self.data == other.data
    }
}

impl From<RadialHarmonicField> for FieldData {
    fn from(f: RadialHarmonicField) -> Self {
        f.data
    }
}

impl From<FieldData> for RadialHarmonicField {
    fn from(d: FieldData) -> Self {
        Self::new(d)
    }
}

/// Panels from 0 to `rmax`, split at `breakpoints`.
pub fn field_panels(rule: &RadialRule, rmax: f64, breakpoints: &[f64]) -> Vec<[f64; 2]> {
    rule.panels(0.0, rmax, breakpoints)
        .into_iter()
        .map(|(a, b)| [a, b])
        .collect()
}

/// Absolute node radii of a panel list, `n` Gauss nodes per panel.
pub fn panel_nodes(panels: &[[f64; 2]], n: usize) -> Vec<f64> {
    let (x, _) = gauss_legendre(n);
    panels
        .iter()
        .flat_map(|[a, b]| x.iter().map(move |t| a + 0.5 * (b - a) * (t + 1.0)))
        .collect()
}

impl RadialHarmonicField {
    pub fn new(data: FieldData) -> Self {
        let n = data.nodes_per_panel;
        let (ref_nodes, _) = gauss_legendre(n);
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let prod: f64 = (0..n)
                    .filter(|&k| k != j)
                    .map(|k| ref_nodes[j] - ref_nodes[k])
                    .product();
                1.0 / prod
            })
            .collect();
        let (sub_x, sub_w) = gauss_legendre(SUB_NODES);
        let nh = count(data.lmax);
        let mut field = Self {
            basis: HarmonicBasis::new(data.lmax),
            ref_nodes,
            bary,
            sub_x,
            sub_w,
            cum_in: Vec::new(),
            cum_out: Vec::new(),
            full_in: vec![0.0; nh],
            edge: vec![0.0; nh],
            data,
        };
        field.accumulate();
        field
    }

    /// Zero source on the given panels.
    pub fn zero(lmax: usize, panels: Vec<[f64; 2]>, nodes_per_panel: usize) -> Self {
        let rows = panels.len() * nodes_per_panel;
        Self::new(FieldData {
            lmax,
            panels,
            nodes_per_panel,
            source: vec![vec![0.0; count(lmax)]; rows],
        })
    }

    pub fn data(&self) -> &FieldData {
        &self.data
    }

    pub fn lmax(&self) -> usize {
        self.data.lmax
    }

    pub fn basis(&self) -> &HarmonicBasis {
        &self.basis
    }

    pub fn rmax(&self) -> f64 {
        self.data.panels.last().map(|p| p[1]).unwrap_or(0.0)
    }

    pub fn node_radii(&self) -> Vec<f64> {
        panel_nodes(&self.data.panels, self.data.nodes_per_panel)
    }

    pub fn validate(&self) -> Vec<String> {
        let d = &self.data;
        let mut errs = Vec::new();
        if d.panels.is_empty() || d.nodes_per_panel < 2 {
            errs.push("need at least one panel and two nodes per panel".into());
            return errs;
        }
        if d.panels[0][0] != 0.0 {
            errs.push("first panel must start at 0".into());
        }
        if d.panels.iter().any(|p| !(p[1] > p[0]))
            || d.panels.windows(2).any(|w| w[0][1] != w[1][0])
        {
            errs.push("panels must be contiguous and increasing".into());
        }
        if d.source.len() != d.panels.len() * d.nodes_per_panel {
            errs.push(format!(
                "source has {} rows, expected {}",
                d.source.len(),
                d.panels.len() * d.nodes_per_panel
            ));
        }
        if d.source.iter().any(|row| row.len() != count(d.lmax)) {
            errs.push(format!(
                "every source row needs {} coefficients",
                count(d.lmax)
            ));
        }
        if d.source.iter().flatten().any(|v| !v.is_finite()) {
            errs.push("source coefficients must be finite".into());
        }
        errs
    }

    /// Lagrange weights at reference coordinate `t` in `[-1, 1]`.
    fn lagrange(&self, t: f64) -> Vec<f64> {
        let n = self.ref_nodes.len();
        if let Some(j) = self.ref_nodes.iter().position(|x| *x == t) {
            let mut w = vec![0.0; n];
            w[j] = 1.0;
            return w;
        }
        let terms: Vec<f64> = (0..n)
            .map(|j| self.bary[j] / (t - self.ref_nodes[j]))
            .collect();
        let s: f64 = terms.iter().sum();
        terms.into_iter().map(|v| v / s).collect()
    }

    /// Interpolated source coefficients at `s` inside panel `p`.
    fn source_at(&self, p: usize, s: f64, out: &mut [f64]) {
        let [a, b] = self.data.panels[p];
        let t = 2.0 * (s - a) / (b - a) - 1.0;
        let w = self.lagrange(t);
        let n = self.data.nodes_per_panel;
        out.iter_mut().for_each(|v| *v = 0.0);
        for (j, wj) in w.iter().enumerate() {
            for (o, f) in out.iter_mut().zip(&self.data.source[p * n + j]) {
                *o += wj * f;
            }
        }
    }

    /// `int_lo^hi s^(l+2) f_lm` and `int_lo^hi s^(1-l) f_lm` inside panel `p`.
    fn partial(&self, p: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
        let nh = count(self.data.lmax);
        let mut inner = vec![0.0; nh];
        let mut outer = vec![0.0; nh];
        if hi <= lo {
            return (inner, outer);
        }
        let mut f = vec![0.0; nh];
        for (x, w) in self.sub_x.iter().zip(&self.sub_w) {
            let s = lo + 0.5 * (hi - lo) * (x + 1.0);
            let ws = 0.5 * (hi - lo) * w;
            self.source_at(p, s, &mut f);
            for idx in 0..nh {
                let l = degree_order(idx).0 as i32;
                inner[idx] += ws * s.powi(l + 2) * f[idx];
                outer[idx] += ws * s.powi(1 - l) * f[idx];
            }
        }
        (inner, outer)
    }

    fn accumulate(&mut self) {
        let np = self.data.panels.len();
        let nh = count(self.data.lmax);
        if np == 0 || self.data.source.len() != np * self.data.nodes_per_panel {
            return;
        }
        let parts: Vec<(Vec<f64>, Vec<f64>)> = (0..np)
            .map(|p| {
                let [a, b] = self.data.panels[p];
                self.partial(p, a, b)
            })
            .collect();
        let rmax = self.rmax();
        let mut edge = vec![0.0; nh];
        self.source_at(np - 1, rmax, &mut edge);
        let mut cum_in = vec![vec![0.0; nh]; np];
        for p in 1..np {
            for idx in 0..nh {
                cum_in[p][idx] = cum_in[p - 1][idx] + parts[p - 1].0[idx];
            }
        }
        let mut cum_out = vec![vec![0.0; nh]; np];
        for idx in 0..nh {
            let l = degree_order(idx).0 as i32;
            // int_rmax^inf s^(1-l) F (rmax/s)^4 ds
            cum_out[np - 1][idx] = edge[idx] * rmax.powi(2 - l) / (2 + l) as f64;
        }
        for p in (0..np - 1).rev() {
            for idx in 0..nh {
                cum_out[p][idx] = cum_out[p + 1][idx] + parts[p + 1].1[idx];
            }
        }
        self.full_in = (0..nh)
            .map(|i| cum_in[np - 1][i] + parts[np - 1].0[i])
            .collect();
        self.cum_in = cum_in;
        self.cum_out = cum_out;
        self.edge = edge;
    }

    /// `(v_lm, v_lm', v_lm'')` at radius `r` for every harmonic.
    pub fn profiles(&self, r: f64) -> Vec<[f64; 3]> {
        let nh = count(self.data.lmax);
        let np = self.data.panels.len();
        let mut f = vec![0.0; nh];
        let (i_in, i_out): (Vec<f64>, Vec<f64>);
        let rmax = self.rmax();
        if r >= rmax {
            let x = rmax / r;
            i_in = (0..nh)
                .map(|idx| {
                    let l = degree_order(idx).0 as i32;
                    let c = self.edge[idx] * rmax.powi(TAIL_POWER);
                    let extra = if l == 1 {
                        c * (r / rmax).ln()
                    } else {
                        c * (r.powi(l - 1) - rmax.powi(l - 1)) / (l - 1) as f64
                    };
                    self.full_in[idx] + extra
                })
                .collect();
            i_out = (0..nh)
                .map(|idx| {
                    let l = degree_order(idx).0 as i32;
                    self.edge[idx] * rmax.powi(TAIL_POWER) * r.powi(-2 - l) / (2 + l) as f64
                })
                .collect();
            for idx in 0..nh {
                f[idx] = self.edge[idx] * x.powi(TAIL_POWER);
            }
        } else {
            let p = self.data.panels.partition_point(|q| q[1] < r).min(np - 1);
            let [a, b] = self.data.panels[p];
            let (lo_in, _) = self.partial(p, a, r);
            let (_, hi_out) = self.partial(p, r, b);
            i_in = (0..nh).map(|i| self.cum_in[p][i] + lo_in[i]).collect();
            i_out = (0..nh).map(|i| self.cum_out[p][i] + hi_out[i]).collect();
            self.source_at(p, r, &mut f);
        }
        (0..nh)
            .map(|idx| {
                let l = degree_order(idx).0 as i32;
                let lf = l as f64;
                let c = -1.0 / (2.0 * lf + 1.0);
                if r <= 0.0 {
                    return [if l == 0 { c * i_out[idx] } else { 0.0 }, 0.0, 0.0];
                }
                let v = c * (r.powi(-l - 1) * i_in[idx] + r.powi(l) * i_out[idx]);
                let dv = c
                    * (-(lf + 1.0) * r.powi(-l - 2) * i_in[idx]
                        + if l == 0 {
                            0.0
                        } else {
                            lf * r.powi(l - 1) * i_out[idx]
                        });
                let ddv = f[idx] - 2.0 * dv / r + lf * (lf + 1.0) * v / (r * r);
                [v, dv, ddv]
            })
            .collect()
    }

    /// Potential `v` at `x`, generic over jets.
    pub fn potential<T: Scalar>(&self, x: &[T; 3]) -> T {
        let r = norm(x);
        let rv = r.value();
        let prof = self.profiles(rv);
        if rv == 0.0 {
            return T::cst(
                prof[0][0] * self.basis.eval(&[T::cst(0.0), T::cst(0.0), T::cst(1.0)])[0].value(),
            );
        }
        let ri = r.recip();
        let z = [x[0] * ri, x[1] * ri, x[2] * ri];
        let ys = self.basis.eval(&z);
        let mut acc = T::cst(0.0);
        for (y, pr) in ys.into_iter().zip(prof) {
            acc = acc + r.lift(pr) * y;
        }
        acc
    }

    /// Source coefficients interpolated at radius `r` (tail model beyond the
    /// grid).
    pub fn source_coefficients(&self, r: f64) -> Vec<f64> {
        let nh = count(self.data.lmax);
        let rmax = self.rmax();
        if r >= rmax {
            return self
                .edge
                .iter()
                .map(|e| e * (rmax / r).powi(TAIL_POWER))
                .collect();
        }
        let np = self.data.panels.len();
        let p = self.data.panels.partition_point(|q| q[1] < r).min(np - 1);
        let mut f = vec![0.0; nh];
        self.source_at(p, r, &mut f);
        f
    }

    /// `int f dv` over all of space, tail included.
    pub fn total_source(&self) -> f64 {
        let rmax = self.rmax();
        let inner = self.full_in[0];
        let tail = self.edge[0] * rmax.powi(3);
        (4.0 * std::f64::consts::PI).sqrt() * (inner + tail)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::index;
    use std::f64::consts::PI;

    fn tabulate<F: Fn(f64) -> Vec<f64>>(
        lmax: usize,
        rmax: f64,
        bps: &[f64],
        f: F,
    ) -> RadialHarmonicField {
        let panels = field_panels(&RadialRule::default(), rmax, bps);
        let n = 8;
        let source = panel_nodes(&panels, n).into_iter().map(f).collect();
        RadialHarmonicField::new(FieldData {
            lmax,
            panels,
            nodes_per_panel: n,
            source,
        })
    }

    /// Uniform ball of radius 1 and density 1: the potential is
    /// `(r^2 - 3)/6` inside and `-1/(3r)` outside.
    #[test]
    fn uniform_ball_monopole() {
        let y0 = (4.0 * PI).sqrt();
        let field = tabulate(2, 100.0, &[1.0], |s| {
            let mut c = vec![0.0; count(2)];
            if s < 1.0 {
                c[0] = y0;
            }
            c
        });
        for r in [0.3, 0.9, 1.5, 10.0, 99.0, 500.0] {
            let v = field.potential(&[r, 0.0, 0.0]);
            let exact = if r < 1.0 {
                (r * r - 3.0) / 6.0
            } else {
                -1.0 / (3.0 * r)
            };
            assert!((v - exact).abs() < 1e-12, "r={r}: {v} vs {exact}");
        }
        assert!((field.total_source() - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    /// Dipole source `f = z (1 - r^2)` on the unit ball against the closed
    /// form solution of the radial ODE.
    #[test]
    fn dipole_profile_matches_ode_solution() {
        let c1 = (4.0 * PI / 3.0).sqrt();
        let field = tabulate(2, 100.0, &[1.0], |s| {
            let mut c = vec![0.0; count(2)];
            if s < 1.0 {
                c[index(1, 0)] = c1 * s * (1.0 - s * s);
            }
            c
        });
        // v_1 = a r + r^3/10 - r^5/28 inside, B/r^2 outside, C^1 at r = 1
        let b = -(1.0 / 5.0 - 1.0 / 7.0) / 3.0;
        let a = b - 1.0 / 10.0 + 1.0 / 28.0;
        for r in [0.2, 0.7, 2.0, 30.0] {
            let exact = if r < 1.0 {
                a * r + r.powi(3) / 10.0 - r.powi(5) / 28.0
            } else {
                b / (r * r)
            };
            let pr = field.profiles(r)[index(1, 0)];
            assert!((pr[0] / c1 - exact).abs() < 1e-12, "r={r}");
        }
    }

    #[test]
    fn jet_laplacian_reproduces_smooth_source() {
        // Gaussian source with a quadrupole part.
        let field = tabulate(4, 60.0, &[], |s| {
            let mut c = vec![0.0; count(4)];
            c[0] = (-s * s).exp();
            c[index(2, 1)] = s * s * (-s * s).exp();
            c
        });
        let basis = HarmonicBasis::new(4);
        for x in [[0.3, 0.2, -0.5], [1.1, -0.7, 0.4], [2.0, 1.0, 1.0]] {
            let v = field.potential(&crate::jet::Jet::point(x));
            let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
            let z = [x[0] / r, x[1] / r, x[2] / r];
            let y = basis.eval(&z);
            let f = (-r * r).exp() * (y[0] + r * r * y[index(2, 1)]);
            assert!((v.laplacian() - f).abs() < 1e-9, "{} vs {f}", v.laplacian());
        }
    }

    #[test]
    fn serde_roundtrip_rebuilds_integrals() {
        let field = tabulate(1, 20.0, &[], |s| {
            vec![(-s).exp(), 0.0, 0.1 * (-s).exp(), 0.0]
        });
        let json = serde_json::to_string(&field).unwrap();
        let back: RadialHarmonicField = serde_json::from_str(&json).unwrap();
        assert_eq!(field, back);
        let x = [0.4, 1.0, -2.0];
        assert_eq!(field.potential(&x), back.potential(&x));
        assert!(field.validate().is_empty());
    }
}
