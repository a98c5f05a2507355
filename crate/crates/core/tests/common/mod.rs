//! First-variation-of-area check for the mean curvature.
//!
//! For the family `psi + t s`, `dA_g/dt = int H <r s z, N>_g dA_g`. The area
//! uses only the metric values and first derivatives of the embedding, and
//! the normal comes from the cross product of tangents, so nothing here
//! shares code with the level-set curvature.

#![allow(dead_code)]

use com_lab::cmc::{mean_curvature_at, CmcSurface};
use com_lab::geometry::{metric_at, MetricSpec, Vec3};
use com_lab::harmonics::HarmonicBasis;
use com_lab::jet::Jet;
use com_lab::quadrature::SphereRule;
use nalgebra::{Matrix3, Vector3};

/// Value and tangential gradient of a function on the unit sphere.
pub type Bump = dyn Fn(&Vec3) -> (f64, Vector3<f64>) + Sync;

/// `exp(k z.z0)`, concentrated near `z0`.
pub fn bump(z0: Vec3, k: f64) -> impl Fn(&Vec3) -> (f64, Vector3<f64>) + Sync {
    move |z| {
        let zv = Vector3::from(*z);
        let c = Vector3::from(z0);
        let v = (k * zv.dot(&c)).exp();
        (v, k * v * (c - zv.dot(&c) * zv))
    }
}

fn tangents(z: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let a = if z[0].abs() < 0.6 {
        Vector3::x()
    } else {
        Vector3::y()
    };
    let e1 = a.cross(z).normalize();
    (e1, z.cross(&e1))
}

struct Node {
    /// Tangent images `dF e1`, `dF e2`, the point, and the metric there.
    d1: Vector3<f64>,
    d2: Vector3<f64>,
    g: Matrix3<f64>,
}

fn node(
    spec: &MetricSpec,
    s: &CmcSurface,
    basis: &HarmonicBasis,
    z: &Vec3,
    t: f64,
    f: &Bump,
) -> Node {
    let zv = Vector3::from(*z);
    let psi = basis.synthesize(&s.graph, &Jet::point(*z));
    let grad = Vector3::from(psi.g);
    let grad = grad - grad.dot(&zv) * zv;
    let (sv, sg) = f(z);
    let (h, hg) = (1.0 + psi.v + t * sv, grad + t * sg);
    let (e1, e2) = tangents(&zv);
    let c = Vector3::from(s.center());
    let x = c + s.radius * h * zv;
    let g = metric_at(spec, &[x[0], x[1], x[2]]).unwrap().g;
    Node {
        d1: s.radius * (h * e1 + hg.dot(&e1) * zv),
        d2: s.radius * (h * e2 + hg.dot(&e2) * zv),
        g,
    }
}

fn area_element(n: &Node) -> f64 {
    let a = n.d1.dot(&(n.g * n.d1));
    let b = n.d1.dot(&(n.g * n.d2));
    let c = n.d2.dot(&(n.g * n.d2));
    (a * c - b * b).sqrt()
}

pub fn area(spec: &MetricSpec, s: &CmcSurface, rule: &SphereRule, t: f64, f: &Bump) -> f64 {
    let basis = HarmonicBasis::new(s.lmax);
    rule.nodes()
        .iter()
        .zip(rule.weights())
        .map(|(z, w)| w * area_element(&node(spec, s, &basis, z, t, f)))
        .sum()
}

/// `(dA/dt at 0 by fourth-order differences, int H <dF/dt, N>_g dA_g)`.
pub fn area_variation(
    spec: &MetricSpec,
    s: &CmcSurface,
    rule: &SphereRule,
    f: &Bump,
) -> (f64, f64) {
    let h = 1e-3;
    let a = |t: f64| area(spec, s, rule, t, f);
    let fd = (8.0 * (a(h) - a(-h)) - (a(2.0 * h) - a(-2.0 * h))) / (12.0 * h);
    let basis = HarmonicBasis::new(s.lmax);
    let predicted = rule
        .nodes()
        .iter()
        .zip(rule.weights())
        .map(|(z, w)| {
            let n = node(spec, s, &basis, z, 0.0, f);
            let normal = n.d1.cross(&n.d2);
            let zv = Vector3::from(*z);
            let gi = n.g.try_inverse().unwrap();
            let speed = s.radius * f(z).0 * zv.dot(&normal) / normal.dot(&(gi * normal)).sqrt();
            let hc = mean_curvature_at(spec, s, z).unwrap();
            w * hc * speed * area_element(&n)
        })
        .sum();
    (fd, predicted)
}
