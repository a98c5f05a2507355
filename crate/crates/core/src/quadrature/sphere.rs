use super::gauss::{gauss_legendre, pairwise_sum_n};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write;

/// Value of a quadrature together with a degree-halving error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
}

impl Estimate<1> {
    pub fn scalar(&self) -> f64 {
        self.value[0]
    }
    pub fn err(&self) -> f64 {
        self.error[0]
    }
}

#[derive(Debug, Clone)]
pub struct NodeSet {
    pub nodes: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    /// Gauss-Legendre in `cos(theta)` times the trapezoid rule in azimuth,
    /// exact for polynomials of total degree `degree` on the unit sphere.
    fn product(degree: usize) -> Self {
        let n_theta = degree / 2 + 1;
        let n_phi = degree + 1;
        let (ct, wt) = gauss_legendre(n_theta);
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let dphi = 2.0 * PI / n_phi as f64;
        for (c, w) in ct.iter().zip(&wt) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for k in 0..n_phi {
                let (sp, cp) = (dphi * k as f64).sin_cos();
                nodes.push([s * cp, s * sp, *c]);
                weights.push(w * dphi);
            }
        }
        Self { nodes, weights }
    }

    fn integrate_n<const N: usize, F>(&self, r: f64, f: &F) -> [f64; N]
    where
        F: Fn([f64; 3]) -> [f64; N] + Sync,
    {
        let r2 = r * r;
        let eval = |(z, w): (&[f64; 3], &f64)| {
            let mut v = f([r * z[0], r * z[1], r * z[2]]);
            for c in v.iter_mut() {
                *c *= w * r2;
            }
            v
        };
        let terms: Vec<[f64; N]> = if self.nodes.len() >= 256 {
            self.nodes
                .par_iter()
                .zip(self.weights.par_iter())
                .map(eval)
                .collect()
        } else {
            self.nodes
                .iter()
                .zip(self.weights.iter())
                .map(eval)
                .collect()
        };
        pairwise_sum_n(&terms)
    }
}

/// Product quadrature on the unit sphere with a half-degree companion used
/// for error estimates.
#[derive(Debug, Clone)]
pub struct SphereRule {
    degree: usize,
    fine: NodeSet,
    coarse: NodeSet,
}

impl SphereRule {
    /// Rule exact through polynomial degree `degree` (rounded up to even,
    /// minimum 2).
    pub fn new(degree: usize) -> Self {
        let degree = degree.max(2);
        let degree = degree + degree % 2;
        let half = (degree / 2).max(2);
        let half = half + half % 2;
        Self {
            degree,
            fine: NodeSet::product(degree),
            coarse: NodeSet::product(half),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn nodes(&self) -> &[[f64; 3]] {
        &self.fine.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.fine.weights
    }

    pub fn len(&self) -> usize {
        self.fine.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fine.nodes.is_empty()
    }

    pub fn fine(&self) -> &NodeSet {
        &self.fine
    }

    pub fn coarse(&self) -> &NodeSet {
        &self.coarse
    }

    /// Dumps `x,y,z,weight` rows with a header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,z,weight\n");
        for (z, w) in self.fine.nodes.iter().zip(&self.fine.weights) {
            let _ = writeln!(s, "{:.16e},{:.16e},{:.16e},{:.16e}", z[0], z[1], z[2], w);
        }
        s
    }

    /// `sum_i w_i f(z_i)` over the unit sphere, no radius scaling.
    pub fn sum<const N: usize, F>(&self, f: F) -> [f64; N]
    where
        F: Fn(&[f64; 3]) -> [f64; N] + Sync,
    {
        self.fine.integrate_n(1.0, &|x: [f64; 3]| f(&x))
    }
}

/// `int_{|x| = r} f dsigma` for a vector-valued field.
pub fn integrate_sphere_n<const N: usize, F>(f: F, r: f64, rule: &SphereRule) -> Estimate<N>
where
    F: Fn([f64; 3]) -> [f64; N] + Sync,
{
    let value = rule.fine.integrate_n(r, &f);
    let coarse = rule.coarse.integrate_n(r, &f);
    let mut error = [0.0; N];
    for k in 0..N {
        error[k] = (value[k] - coarse[k]).abs();
    }
    Estimate { value, error }
}

/// `int_{|x| = r} f dsigma`.
pub fn integrate_sphere<F>(f: F, r: f64, rule: &SphereRule) -> Estimate<1>
where
    F: Fn([f64; 3]) -> f64 + Sync,
{
    integrate_sphere_n(|x| [f(x)], r, rule)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exact `int_{S^2} x^a y^b z^c` via the beta-function moment formula.
    pub(crate) fn monomial_moment(a: u32, b: u32, c: u32) -> f64 {
        if a % 2 == 1 || b % 2 == 1 || c % 2 == 1 {
            return 0.0;
        }
        // 2 Gamma(b1) Gamma(b2) Gamma(b3) / Gamma(b1 + b2 + b3), b_i = (e_i + 1)/2
        fn gamma_half(k: u32) -> f64 {
            // Gamma(k / 2) for integer k >= 1
            if k.is_multiple_of(2) {
                (1..k / 2).map(|i| i as f64).product()
            } else {
                let mut g = PI.sqrt();
                let mut x = 0.5;
                while (2.0 * x) < k as f64 {
                    g *= x;
                    x += 1.0;
                }
                g
            }
        }
        2.0 * gamma_half(a + 1) * gamma_half(b + 1) * gamma_half(c + 1) / gamma_half(a + b + c + 3)
    }

    #[test]
    fn weights_sum_to_area() {
        for d in [2, 4, 8, 16, 32] {
            let rule = SphereRule::new(d);
            let s: f64 = rule.weights().iter().sum();
            assert!((s - 4.0 * PI).abs() < 1e-12);
            assert!(rule
                .nodes()
                .iter()
                .all(|z| ((z[0] * z[0] + z[1] * z[1] + z[2] * z[2]).sqrt() - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn moment_oracle_sanity() {
        assert!((monomial_moment(0, 0, 0) - 4.0 * PI).abs() < 1e-14);
        assert!((monomial_moment(2, 0, 0) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((monomial_moment(2, 2, 2) - 4.0 * PI / 105.0).abs() < 1e-14);
    }

    #[test]
    fn exact_for_all_monomials_up_to_degree() {
        for d in [2usize, 4, 6, 8, 12] {
            let rule = SphereRule::new(d);
            for a in 0..=d as u32 {
                for b in 0..=(d as u32 - a) {
                    for c in 0..=(d as u32 - a - b) {
                        let q = integrate_sphere(
                            |x| x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32),
                            1.0,
                            &rule,
                        );
                        let exact = monomial_moment(a, b, c);
                        assert!((q.scalar() - exact).abs() < 1e-12, "D={d} ({a},{b},{c})");
                    }
                }
            }
        }
    }

    #[test]
    fn degree_eight_sextic_product() {
        let rule = SphereRule::new(8);
        let q = integrate_sphere(|x| (x[0] * x[1] * x[2]).powi(2), 1.0, &rule);
        assert!((q.scalar() - 4.0 * PI / 105.0).abs() < 1e-14);
    }

    #[test]
    fn radius_scaling_and_parity() {
        let rule = SphereRule::new(4);
        let r = 3.5;
        let one = integrate_sphere(|_| 1.0, r, &rule);
        assert!((one.scalar() - 4.0 * PI * r * r).abs() < 1e-11);
        let odd = integrate_sphere(|x| x[0], r, &rule);
        assert!(odd.scalar().abs() < 1e-12);
        let q = integrate_sphere(|x| x[0] * x[0] / (r * r), r, &rule);
        assert!((q.scalar() - 4.0 * PI * r * r / 3.0).abs() < 1e-11);
        // (x^alpha)^2 over S(t) is 4 pi t^4 / 3
        let t = 2.0;
        let q = integrate_sphere(|x| x[2] * x[2], t, &rule);
        assert!((q.scalar() - 4.0 * PI * t.powi(4) / 3.0).abs() < 1e-11);
    }

    #[test]
    fn csv_dump_has_one_row_per_node() {
        let rule = SphereRule::new(4);
        let csv = rule.to_csv();
        assert_eq!(csv.lines().count(), rule.len() + 1);
        assert!(csv.starts_with("x,y,z,weight\n"));
    }
}
