use com_lab::com::adm_mass_at;
use com_lab::geometry::scalar_curvature_at;
use com_lab::harmonics::{count, HarmonicBasis};
use com_lab::jet::Jet;
use com_lab::prescription::*;
use com_lab::quadrature::{gauss_on, RadialRule, SphereRule};
use com_lab::Error;
use proptest::prelude::*;
use std::f64::consts::{E, PI};
use std::sync::OnceLock;

fn ctl() -> PotentialControls {
    PotentialControls::default()
}

fn dipole_source() -> SourceSpec {
    SourceSpec::oscillatory_dipole([0.0, 0.0, 1.0], 2.0)
}

fn scaled(r: f64, d: [f64; 3]) -> [f64; 3] {
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    [r * d[0] / n, r * d[1] / n, r * d[2] / n]
}

/// Potential of the unit bump `(1 - s^2)^4` from the radial formula
/// `v(r) = -1/r int_0^r s^2 f - int_r^inf s f`, by 1-D Gauss rules.
fn bump_oracle(r: f64) -> f64 {
    let f = |s: f64| (1.0 - s * s).powi(4);
    let (a, wa) = gauss_on(0.0, r.min(1.0), 40);
    let inner: f64 = a.iter().zip(&wa).map(|(s, w)| w * s * s * f(*s)).sum();
    let outer: f64 = if r < 1.0 {
        let (b, wb) = gauss_on(r, 1.0, 40);
        b.iter().zip(&wb).map(|(s, w)| w * s * f(*s)).sum()
    } else {
        0.0
    };
    -inner / r - outer
}

fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0.ln()).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0.ln() - mx) * (p.1.ln() - my))
        .sum();
    let sxx: f64 = points.iter().map(|p| (p.0.ln() - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn zero_source_gives_zero() {
    let zero = SourceSpec::Zero {};
    let v = newtonian_potential(&zero, &[1.0, 2.0, 3.0], &ctl()).unwrap();
    assert_eq!(v.value, 0.0);
    assert_eq!(mass_from_source(&zero, &ctl()).unwrap(), 0.0);
}

#[test]
fn shell_theorem_outside_bump() {
    for (center, amp, radius) in [([0.0; 3], 1.0, 1.0), ([0.5, -0.2, 0.3], -3.0, 0.8)] {
        let src = SourceSpec::RadialBump {
            amplitude: amp,
            radius,
            center,
        };
        let q = SourceSpec::bump_integral(amp, radius);
        for x in [
            [1.9, 0.4, 0.0],
            [0.0, -3.0, 2.0],
            [20.0, 5.0, -7.0],
            [150.0, 0.0, 1.0],
        ] {
            let d = ((x[0] - center[0]).powi(2)
                + (x[1] - center[1]).powi(2)
                + (x[2] - center[2]).powi(2))
            .sqrt();
            let exact = -q / (4.0 * PI * d);
            let v = newtonian_potential(&src, &x, &ctl()).unwrap();
            assert!(
                (v.value - exact).abs() <= 1e-6 * exact.abs(),
                "{x:?}: {} vs {exact}",
                v.value
            );
        }
    }
}

#[test]
fn bump_interior_matches_radial_oracle() {
    let src = SourceSpec::radial_bump(1.0, 1.0);
    for r in [0.05, 0.37, 0.62, 0.95, 1.05, 2.0] {
        let v = newtonian_potential(&src, &scaled(r, [0.6, 0.0, 0.8]), &ctl()).unwrap();
        let exact = bump_oracle(r);
        assert!(
            (v.value - exact).abs() < 1e-8,
            "r={r}: {} vs {exact}",
            v.value
        );
        assert!(v.error < 1e-5);
    }
}

#[test]
fn bump_mass_from_total_integral() {
    // Q = -2 pi gives m = 1
    let amp = -2.0 * PI / SourceSpec::bump_integral(1.0, 1.0);
    let m = mass_from_source(&SourceSpec::radial_bump(amp, 1.0), &ctl()).unwrap();
    assert!((m - 1.0).abs() < 1e-9, "{m}");
}

#[test]
fn laplacian_reproduces_source() {
    let src = SourceSpec::radial_bump(1.0, 1.0);
    let field = PotentialField::new(src.clone(), ctl()).unwrap();
    for x in [[0.2, 0.1, -0.3], [0.5, 0.3, 0.2]] {
        let lap = field.laplacian_fd(&x, 0.01).unwrap();
        assert!((lap - src.density(&x)).abs() < 1e-6, "{x:?}: {lap}");
    }
    let k = PotentialField::new(dipole_source(), ctl()).unwrap();
    let x = [2.0, 1.0, -1.0];
    let lap = k.laplacian_fd(&x, 0.02).unwrap();
    assert!((lap - dipole_source().density(&x)).abs() < 1e-7);
}

#[test]
fn harmonic_outside_compact_support() {
    let field = PotentialField::new(SourceSpec::radial_bump(1.0, 1.0), ctl()).unwrap();
    for x in [[2.0, 2.0, 2.0], [1.5, 0.2, 0.0], [0.0, -4.0, 1.0]] {
        let lap = field.laplacian_fd(&x, 0.02).unwrap();
        assert!(lap.abs() < 1e-6, "{x:?}: {lap}");
    }
}

#[test]
fn nonpositive_source_gives_nonnegative_potential() {
    let neg_bump = SourceSpec::radial_bump(-1.0, 1.5);
    let neg_dipole = |y: &[f64; 3]| -dipole_source().density(y);
    for r in [0.0, 0.3, 1.0, 1.4, 3.0, 40.0] {
        for d in [
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 0.0, -1.0],
            [1.0, -1.0, 1.0],
        ] {
            let x = scaled(r, d);
            assert!(newtonian_potential(&neg_bump, &x, &ctl()).unwrap().value >= 0.0);
            assert!(newtonian_potential(&neg_dipole, &x, &ctl()).unwrap().value >= 0.0);
        }
    }
}

/// Independent route: project the source onto harmonics at radial nodes and
/// solve the radial ODEs per harmonic.
#[test]
fn direct_quadrature_agrees_with_multipole_solution() {
    let src = dipole_source();
    let lmax = 2;
    let panels = field_panels(&RadialRule::default(), 1e4, &[0.5, 1.0]);
    let rule = SphereRule::new(8);
    let basis = HarmonicBasis::new(lmax);
    let source = panel_nodes(&panels, 8)
        .into_iter()
        .map(|r| {
            let mut c = vec![0.0; count(lmax)];
            for (z, w) in rule.nodes().iter().zip(rule.weights()) {
                let f = src.density(&[r * z[0], r * z[1], r * z[2]]);
                for (ck, yk) in c.iter_mut().zip(basis.eval(z)) {
                    *ck += w * f * yk;
                }
            }
            c
        })
        .collect();
    let field = RadialHarmonicField::new(FieldData {
        lmax,
        panels,
        nodes_per_panel: 8,
        source,
    });
    for x in [
        [0.1, 0.2, 0.3],
        [0.4, -0.5, 0.6],
        [3.0, 1.0, -2.0],
        [40.0, 10.0, 25.0],
    ] {
        let direct = newtonian_potential(&src, &x, &ctl()).unwrap().value;
        let multipole = field.potential(&x);
        assert!(
            (direct - multipole).abs() < 1e-8 * multipole.abs(),
            "{x:?}: {direct} vs {multipole}"
        );
    }
    let m = mass_from_source(&src, &ctl()).unwrap();
    assert!((m + field.total_source() / (2.0 * PI)).abs() < 1e-6 * m.abs());
}

#[test]
fn remainder_is_bounded_for_oscillatory_source() {
    let field = PotentialField::new(dipole_source(), ctl()).unwrap();
    let dirs = SphereRule::new(4).nodes().to_vec();
    let points: Vec<(f64, f64)> = (2..=8)
        .map(|j| {
            let r = 2f64.powi(j);
            let sup = dirs
                .iter()
                .map(|d| field.remainder(&scaled(r, *d)).unwrap().abs())
                .fold(0.0, f64::max);
            (r, r * r * sup)
        })
        .collect();
    assert!(points.iter().all(|p| p.1 < 2.0), "{points:?}");
    assert!(loglog_slope(&points) <= 0.1, "{points:?}");
}

#[test]
fn mass_matches_fit_along_ray() {
    let src = dipole_source();
    let m = mass_from_source(&src, &ctl()).unwrap();
    // r v(r) = m/2 + c/r, least squares in 1/r
    let radii = [250.0, 500.0, 1000.0, 2000.0];
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .map(|r| {
            (
                1.0 / r,
                r * newtonian_potential(&src, &[0.0, *r, 0.0], &ctl())
                    .unwrap()
                    .value,
            )
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let fitted = 2.0 * (my - slope * mx);
    assert!((fitted - m).abs() < 0.01 * m.abs(), "{fitted} vs {m}");
}

#[test]
fn unbounded_moment_degrades_decay_by_a_log() {
    // f = z / r^5 outside the unit ball: |f| <= r^-4 but the first moment
    // grows like log r.
    let radii: Vec<f64> = (0..=56).map(|k| 2f64.powf(k as f64 / 4.0)).collect();
    let src = SourceSpec::Custom(TabulatedSource {
        monopole: vec![0.0; radii.len()],
        dipole: radii.iter().map(|r| [0.0, 0.0, r.powi(-4)]).collect(),
        radii,
        decay: 4.0,
    });
    let field = PotentialField::new(src, ctl()).unwrap();
    assert!(field.mass().abs() < 1e-12);
    let points: Vec<(f64, f64)> = (2..=8)
        .map(|j| {
            let r = 2f64.powi(j);
            (r, r * r * field.remainder(&[0.0, 0.0, r]).unwrap().abs())
        })
        .collect();
    assert!(points.windows(2).all(|w| w[1].1 > w[0].1));
    let per_log: Vec<f64> = points.iter().map(|(r, v)| v / r.ln()).collect();
    let (lo, hi) = per_log
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    assert!(hi < 2.0 * lo, "{per_log:?}");
    assert!(loglog_slope(&points) > 0.1);
}

#[test]
fn first_moment_follows_sine_of_log() {
    let src = dipole_source();
    let base = first_moment(&src, E, 2, &ctl());
    let amp = 4.0 * PI / 3.0;
    for k in [1.5f64, 2.0, 3.0, 4.0, 5.0] {
        let r = k.exp();
        let d = first_moment(&src, r, 2, &ctl()) - base;
        let exact = amp * ((r.ln()).sin() - 1f64.sin());
        assert!((d - exact).abs() < 1e-3 * amp, "r=e^{k}: {d} vs {exact}");
        // orthogonal components do not move
        assert!(first_moment(&src, r, 0, &ctl()).abs() < 1e-12);
    }
    let radial_only = SourceSpec::oscillatory_dipole([0.0; 3], 1.0);
    for r in [2.0, 50.0] {
        for a in 0..3 {
            assert!(first_moment(&radial_only, r, a, &ctl()).abs() < 1e-12);
        }
    }
}

#[test]
fn source_decays_with_derivatives() {
    let src = SourceSpec::oscillatory_dipole([0.3, -1.0, 0.5], 1.5);
    let mut bounds = [0.0f64; 4];
    for k in 1..=40 {
        let r = 2f64.powf(k as f64 / 4.0);
        for d in [[1.0, 0.2, 0.3], [-0.3, 0.9, 0.1], [0.1, -0.4, -1.0]] {
            let x = scaled(r, d);
            let j = src.eval(&Jet::point(x));
            let h = 1e-3 * r;
            let mut third: f64 = 0.0;
            for a in 0..3 {
                let (mut p, mut m) = (x, x);
                p[a] += h;
                m[a] -= h;
                let hp = src.eval(&Jet::point(p)).h;
                let hm = src.eval(&Jet::point(m)).h;
                for b in 0..3 {
                    for c in 0..3 {
                        third = third.max(((hp[b][c] - hm[b][c]) / (2.0 * h)).abs());
                    }
                }
            }
            let grad = j.g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let hess = j.h.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            if r >= 2.0 {
                bounds[0] = bounds[0].max(j.v.abs() * r.powi(4));
                bounds[1] = bounds[1].max(grad * r.powi(5));
                bounds[2] = bounds[2].max(hess * r.powi(6));
                bounds[3] = bounds[3].max(third * r.powi(7));
            }
        }
    }
    assert!(bounds[0] <= 1.5 + 1.2);
    for b in bounds {
        assert!(b.is_finite() && b < 1e4, "{bounds:?}");
    }
}

fn solved() -> &'static ConformalSolution {
    static SOL: OnceLock<ConformalSolution> = OnceLock::new();
    SOL.get_or_init(|| picard_solve(&dipole_source(), 1.0, &PicardControls::default()).unwrap())
}

#[test]
fn picard_with_zero_source_is_trivial() {
    let sol = picard_solve(&SourceSpec::Zero {}, 1.0, &PicardControls::default()).unwrap();
    assert_eq!(sol.iterations, 0);
    assert_eq!(sol.mass, 0.0);
    assert_eq!(sol.conformal_factor(&[0.3, 1.0, -2.0]), 1.0);
}

#[test]
fn picard_solution_is_positive_and_massive() {
    let sol = solved();
    assert!(sol.coupling < 1.0 && sol.coupling > 0.0);
    assert_eq!(sol.requested_coupling, 1.0);
    assert!(sol.updates.last().unwrap() < &1e-8);
    assert!(sol.updates.windows(2).all(|w| w[1] < w[0]));
    assert!(sol.mass > 0.0);
    for x in validation_points(50) {
        assert!(sol.conformal_factor(&x) > 1.0);
    }
    let sup_k = (0..200)
        .map(|k| dipole_source().density(&[0.0, 0.0, -1.0 + 0.01 * k as f64]))
        .fold(0.0f64, f64::max);
    assert!(
        sol.residual <= 1e-5 * sol.coupling * sup_k,
        "{}",
        sol.residual
    );
}

#[test]
fn built_metric_has_prescribed_curvature_and_mass() {
    let sol = solved();
    let metric = build_counterexample_metric(sol);
    for x in validation_points(20) {
        let r = scalar_curvature_at(&metric, &x).unwrap();
        let ak = sol.coupling * dipole_source().density(&x);
        assert!((r - ak).abs() <= 1e-3 * ak, "{x:?}: {r} vs {ak}");
    }
    let adm = adm_mass_at(&metric, 100.0, &SphereRule::new(24)).unwrap();
    assert!(
        (adm - sol.mass).abs() < 0.02 * sol.mass,
        "{adm} vs {}",
        sol.mass
    );
    let json = serde_json::to_string(&metric).unwrap();
    let back: com_lab::geometry::MetricSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(back, metric);
}

#[test]
fn picard_reports_missing_contraction() {
    let ctl = PicardControls {
        auto_shrink: false,
        ..PicardControls::default()
    };
    let err = picard_solve(&dipole_source(), 8.0, &ctl).unwrap_err();
    assert!(matches!(err, Error::NoContraction { coupling } if coupling == 8.0));
    assert!(err.is_numerical_failure());
}

#[test]
fn picard_rejects_bad_input() {
    let negative = SourceSpec::oscillatory_dipole([0.0, 0.0, 1.0], 0.5);
    let ctl = PicardControls::default();
    assert!(matches!(
        picard_solve(&negative, 0.1, &ctl),
        Err(Error::InvalidSpec(_))
    ));
    assert!(matches!(
        picard_solve(&dipole_source(), 0.0, &ctl),
        Err(Error::InvalidSpec(_))
    ));
}

#[test]
fn solution_export_layout() {
    let sol = solved();
    let header = serde_json::to_value(sol.header()).unwrap();
    for key in ["a", "m", "residual", "iterations"] {
        assert!(header.get(key).is_some(), "{key}");
    }
    let csv = sol.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,index,coefficient"));
    let rows = lines.count();
    assert_eq!(rows, sol.field.node_radii().len() * count(sol.field.lmax()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dipole_source_is_nonnegative_and_decays(
        bz in -1.0f64..1.0, bx in -1.0f64..1.0, extra in 0.0f64..2.0,
        r in 0.01f64..1e4, th in 0.0f64..PI, ph in 0.0f64..(2.0 * PI),
    ) {
        let nb = (bx * bx + bz * bz).sqrt();
        let amp = nb + extra;
        let src = SourceSpec::oscillatory_dipole([bx, 0.0, bz], amp);
        let y = [r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()];
        let k = src.density(&y);
        prop_assert!(k >= -1e-15);
        if r >= 1.0 {
            prop_assert!(k * r.powi(4) <= amp + nb + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn potential_is_linear_in_the_source(
        alpha in -2.0f64..2.0, beta in -2.0f64..2.0,
        x in prop::array::uniform3(-5.0f64..5.0),
    ) {
        let f = SourceSpec::radial_bump(1.0, 1.0);
        let g = dipole_source();
        struct Mix(f64, SourceSpec, f64, SourceSpec);
        impl Density for Mix {
            fn density(&self, y: &[f64; 3]) -> f64 {
                self.0 * self.1.density(y) + self.2 * self.3.density(y)
            }
            fn breakpoints(&self) -> Vec<f64> {
                let mut b = self.1.breakpoints();
                b.extend(self.3.breakpoints());
                b
            }
        }
        let mix = Mix(alpha, f.clone(), beta, g.clone());
        let c = ctl();
        let lhs = newtonian_potential(&mix, &x, &c).unwrap().value;
        let rhs = alpha * newtonian_potential(&f, &x, &c).unwrap().value
            + beta * newtonian_potential(&g, &x, &c).unwrap().value;
        prop_assert!((lhs - rhs).abs() < 1e-8 * (1.0 + rhs.abs()), "{} vs {}", lhs, rhs);
    }
}
