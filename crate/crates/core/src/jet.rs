//! Second-order forward-mode differentiation in three variables.
//!
//! Every closed-form field in the crate (conformal factors, perturbations,
//! spherical harmonics, level-set functions of surfaces) is written once,
//! generic over [`Scalar`]. Evaluating it with `f64` gives values; evaluating
//! with [`Jet`] gives the value together with the exact gradient and Hessian
//! with respect to the Cartesian coordinates.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the generic field code.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;

    fn value(&self) -> f64;

    /// Composes with a univariate function given its value and first two
    /// derivatives at `self.value()`.
    fn lift(self, d: [f64; 3]) -> Self;

    fn scale(self, c: f64) -> Self;

    fn add_c(self, c: f64) -> Self {
        self + Self::cst(c)
    }

    fn sqrt(self) -> Self {
        let s = self.value().sqrt();
        self.lift([s, 0.5 / s, -0.25 / (s * s * s)])
    }

    fn recip(self) -> Self {
        let v = self.value();
        self.lift([1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v)])
    }

    fn powi(self, n: i32) -> Self {
        let v = self.value();
        let nf = n as f64;
        let d2 = if n == 0 || n == 1 {
            0.0
        } else {
            nf * (nf - 1.0) * v.powi(n - 2)
        };
        let d1 = if n == 0 { 0.0 } else { nf * v.powi(n - 1) };
        self.lift([v.powi(n), d1, d2])
    }

    fn powf(self, p: f64) -> Self {
        let v = self.value();
        self.lift([
            v.powf(p),
            p * v.powf(p - 1.0),
            p * (p - 1.0) * v.powf(p - 2.0),
        ])
    }

    fn ln(self) -> Self {
        let v = self.value();
        self.lift([v.ln(), 1.0 / v, -1.0 / (v * v)])
    }

    fn sin(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.lift([s, c, -s])
    }

    fn cos(self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.lift([c, -s, -c])
    }
}

impl Scalar for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn lift(self, d: [f64; 3]) -> Self {
        d[0]
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
    #[inline]
    fn add_c(self, c: f64) -> Self {
        self + c
    }
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    #[inline]
    fn recip(self) -> Self {
        1.0 / self
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    #[inline]
    fn ln(self) -> Self {
        f64::ln(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
}

/// Value, gradient and Hessian of a scalar field at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 3],
    pub h: [[f64; 3]; 3],
}

impl Jet {
    pub const fn constant(v: f64) -> Self {
        Self {
            v,
            g: [0.0; 3],
            h: [[0.0; 3]; 3],
        }
    }

    /// The coordinate function `x^axis` seeded at `v`.
    pub fn var(v: f64, axis: usize) -> Self {
        let mut g = [0.0; 3];
        g[axis] = 1.0;
        Self {
            v,
            g,
            h: [[0.0; 3]; 3],
        }
    }

    /// Seeds all three coordinates at `x`.
    pub fn point(x: [f64; 3]) -> [Jet; 3] {
        [Jet::var(x[0], 0), Jet::var(x[1], 1), Jet::var(x[2], 2)]
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0][0] + self.h[1][1] + self.h[2][2]
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, o: Jet) -> Jet {
        let mut r = self;
        r.v += o.v;
        for i in 0..3 {
            r.g[i] += o.g[i];
            for j in 0..3 {
                r.h[i][j] += o.h[i][j];
            }
        }
        r
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, o: Jet) -> Jet {
        let mut r = self;
        r.v -= o.v;
        for i in 0..3 {
            r.g[i] -= o.g[i];
            for j in 0..3 {
                r.h[i][j] -= o.h[i][j];
            }
        }
        r
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, o: Jet) -> Jet {
        let mut r = Jet::constant(self.v * o.v);
        for i in 0..3 {
            r.g[i] = self.g[i] * o.v + self.v * o.g[i];
            for j in 0..3 {
                r.h[i][j] = self.h[i][j] * o.v
                    + self.v * o.h[i][j]
                    + self.g[i] * o.g[j]
                    + self.g[j] * o.g[i];
            }
        }
        r
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Scalar for Jet {
    #[inline]
    fn cst(v: f64) -> Self {
        Jet::constant(v)
    }

    #[inline]
    fn value(&self) -> f64 {
        self.v
    }

    #[inline]
    fn lift(self, d: [f64; 3]) -> Self {
        let mut r = Jet::constant(d[0]);
        for i in 0..3 {
            r.g[i] = d[1] * self.g[i];
            for j in 0..3 {
                r.h[i][j] = d[1] * self.h[i][j] + d[2] * self.g[i] * self.g[j];
            }
        }
        r
    }

    #[inline]
    fn scale(self, c: f64) -> Self {
        let mut r = self;
        r.v *= c;
        for i in 0..3 {
            r.g[i] *= c;
            for j in 0..3 {
                r.h[i][j] *= c;
            }
        }
        r
    }

    #[inline]
    fn add_c(self, c: f64) -> Self {
        let mut r = self;
        r.v += c;
        r
    }
}

pub fn dot<T: Scalar>(a: &[T; 3], b: &[T; 3]) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm<T: Scalar>(a: &[T; 3]) -> T {
    dot(a, a).sqrt()
}

pub fn lift_point<T: Scalar>(x: [f64; 3]) -> [T; 3] {
    [T::cst(x[0]), T::cst(x[1]), T::cst(x[2])]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field<T: Scalar>(x: &[T; 3]) -> T {
        // r^-1 * sin(x0) + x1^2 x2 / (1 + x0^2)
        let r = norm(x);
        r.recip() * x[0].sin() + x[1] * x[1] * x[2] / (x[0] * x[0]).add_c(1.0)
    }

    #[test]
    fn gradient_and_hessian_match_central_differences() {
        let p = [0.7, -1.3, 2.1];
        let j = field(&Jet::point(p));
        assert!((j.v - field(&p)).abs() < 1e-15);
        let h = 1e-4;
        for a in 0..3 {
            let mut pp = p;
            let mut pm = p;
            pp[a] += h;
            pm[a] -= h;
            let fd = (field(&pp) - field(&pm)) / (2.0 * h);
            assert!((fd - j.g[a]).abs() < 1e-7, "grad {a}: {fd} vs {}", j.g[a]);
            let jp = field(&Jet::point(pp));
            let jm = field(&Jet::point(pm));
            for b in 0..3 {
                let fd2 = (jp.g[b] - jm.g[b]) / (2.0 * h);
                assert!((fd2 - j.h[a][b]).abs() < 1e-6);
                assert!((j.h[a][b] - j.h[b][a]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn laplacian_of_inverse_distance_vanishes() {
        let x = Jet::point([1.2, 0.4, -2.0]);
        let f = norm(&x).recip();
        assert!(f.laplacian().abs() < 1e-14);
    }

    #[test]
    fn powers_agree_with_repeated_products() {
        let x = Jet::var(1.7, 1);
        let a = x.powi(5);
        let b = x * x * x * x * x;
        assert!((a.v - b.v).abs() < 1e-12);
        assert!((a.g[1] - b.g[1]).abs() < 1e-11);
        assert!((a.h[1][1] - b.h[1][1]).abs() < 1e-10);
        let c = x.powf(0.25).powi(4);
        assert!((c.h[1][1]).abs() < 1e-12);
    }
}
