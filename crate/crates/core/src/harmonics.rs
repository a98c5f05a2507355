//! Real orthonormal spherical harmonics, written as polynomials in the
//! components of a unit vector so that they can be evaluated on jets.

use crate::jet::Scalar;
use std::f64::consts::PI;

/// Flat index of `(l, m)`, `-l <= m <= l`.
#[inline]
pub fn index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

/// Inverse of [`index`].
pub fn degree_order(idx: usize) -> (usize, i64) {
    let l = (idx as f64).sqrt().floor() as usize;
    let l = if (l + 1) * (l + 1) <= idx { l + 1 } else { l };
    (l, idx as i64 - (l * l + l) as i64)
}

pub fn count(lmax: usize) -> usize {
    (lmax + 1) * (lmax + 1)
}

/// Real spherical harmonics up to degree `lmax`, orthonormal on the unit
/// sphere. `m > 0` carries `cos(m phi)`, `m < 0` carries `sin(|m| phi)`, no
/// Condon-Shortley phase. With this convention `Y_{1,1}`, `Y_{1,-1}`, `Y_{1,0}`
/// are `sqrt(3/4pi)` times `x`, `y`, `z`.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    lmax: usize,
    norms: Vec<f64>,
}

impl HarmonicBasis {
    pub fn new(lmax: usize) -> Self {
        let mut norms = vec![0.0; count(lmax)];
        for l in 0..=lmax {
            for m in 0..=l {
                let mut ratio = 1.0;
                for k in (l - m + 1)..=(l + m) {
                    ratio /= k as f64;
                }
                let n = ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt();
                if m == 0 {
                    norms[index(l, 0)] = n;
                } else {
                    norms[index(l, m as i64)] = n * 2f64.sqrt();
                    norms[index(l, -(m as i64))] = n * 2f64.sqrt();
                }
            }
        }
        Self { lmax, norms }
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    pub fn len(&self) -> usize {
        count(self.lmax)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Evaluates every harmonic at the unit vector `z`.
    pub fn eval<T: Scalar>(&self, z: &[T; 3]) -> Vec<T> {
        let lmax = self.lmax;
        let mut out = vec![T::cst(0.0); count(lmax)];
        let (x, y, zz) = (z[0], z[1], z[2]);
        // C_m + i S_m = (x + i y)^m
        let mut cm = T::cst(1.0);
        let mut sm = T::cst(0.0);
        let mut double_fact = 1.0;
        for m in 0..=lmax {
            if m > 0 {
                let c_next = x * cm - y * sm;
                let s_next = x * sm + y * cm;
                cm = c_next;
                sm = s_next;
                double_fact *= (2 * m - 1) as f64;
            }
            // Q_l^m = d^m P_l / dz^m, starting at l = m.
            let mut q_prev = T::cst(0.0);
            let mut q = T::cst(double_fact);
            for l in m..=lmax {
                if l > m {
                    let next = if l == m + 1 {
                        zz * q.scale((2 * m + 1) as f64)
                    } else {
                        (zz * q.scale((2 * l - 1) as f64) - q_prev.scale((l + m - 1) as f64))
                            .scale(1.0 / (l - m) as f64)
                    };
                    q_prev = q;
                    q = next;
                }
                if m == 0 {
                    out[index(l, 0)] = q.scale(self.norms[index(l, 0)]);
                } else {
                    out[index(l, m as i64)] = (q * cm).scale(self.norms[index(l, m as i64)]);
                    out[index(l, -(m as i64))] = (q * sm).scale(self.norms[index(l, -(m as i64))]);
                }
            }
        }
        out
    }

    /// `sum_k coeffs[k] Y_k(z)`.
    pub fn synthesize<T: Scalar>(&self, coeffs: &[f64], z: &[T; 3]) -> T {
        let ys = self.eval(z);
        let mut acc = T::cst(0.0);
        for (c, y) in coeffs.iter().zip(ys) {
            if *c != 0.0 {
                acc = acc + y.scale(*c);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::SphereRule;

    #[test]
    fn index_roundtrip() {
        for idx in 0..count(12) {
            let (l, m) = degree_order(idx);
            assert_eq!(index(l, m), idx);
            assert!(m.unsigned_abs() as usize <= l);
        }
    }

    #[test]
    fn orthonormal_under_exact_rule() {
        let lmax = 8;
        let basis = HarmonicBasis::new(lmax);
        let rule = SphereRule::new(2 * lmax + 2);
        let n = basis.len();
        let mut gram = vec![0.0; n * n];
        for (z, w) in rule.nodes().iter().zip(rule.weights()) {
            let y = basis.eval(z);
            for a in 0..n {
                for b in 0..n {
                    gram[a * n + b] += w * y[a] * y[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (gram[a * n + b] - expect).abs() < 1e-12,
                    "gram[{a},{b}] = {}",
                    gram[a * n + b]
                );
            }
        }
    }

    #[test]
    fn degree_one_is_cartesian() {
        let basis = HarmonicBasis::new(1);
        let z = [0.6, -0.48, 0.64];
        let y = basis.eval(&z);
        let c = (3.0 / (4.0 * PI)).sqrt();
        assert!((y[index(1, 1)] - c * z[0]).abs() < 1e-15);
        assert!((y[index(1, -1)] - c * z[1]).abs() < 1e-15);
        assert!((y[index(1, 0)] - c * z[2]).abs() < 1e-15);
    }
}
