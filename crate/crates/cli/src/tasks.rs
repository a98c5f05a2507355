use crate::config::{NormalChoice, Task, Validated};
use com_lab::cmc::{cmc_residual, h_expansion_check, huang_gap, solve_cmc_series, CmcControls};
use com_lab::com::{
    adm_mass_at, c_cs_flat_at, limit_verdict, radius_grid, scalar_moments_annulus, ComSeries,
    Normal,
};
use com_lab::geometry::{scalar_curvature_at, scalar_curvature_general, MetricSpec, Vec3};
use com_lab::prescription::{
    build_counterexample_metric, first_moment, picard_solve, validation_points, Density,
    PicardControls, PotentialControls, PotentialField, SourceSpec,
};
use com_lab::quadrature::{RadialRule, SphereRule};
use com_lab::{Error, Result};
use rayon::prelude::*;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt::Write;

/// Everything a task produces, held in memory until the run has succeeded.
#[derive(Debug, Default)]
pub struct Outcome {
    /// `(suffix, contents)`; the file is written as `<prefix>.<suffix>`.
    pub files: Vec<(String, String)>,
    pub summary: BTreeMap<String, Value>,
    pub error_estimates: BTreeMap<String, f64>,
    pub verdicts: BTreeMap<String, Value>,
}

impl Outcome {
    fn file(&mut self, suffix: &str, body: String) {
        self.files.push((suffix.to_string(), body));
    }

    fn note(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.to_string(), v.into());
    }
}

struct Setup<'a> {
    cfg: &'a Validated,
    radii: Vec<f64>,
    sphere: SphereRule,
    radial: RadialRule,
}

impl Setup<'_> {
    fn metric(&self) -> &MetricSpec {
        self.cfg.metric.as_ref().expect("validated")
    }

    fn source(&self) -> &SourceSpec {
        self.cfg.source.as_ref().expect("validated")
    }
}

pub fn run(cfg: &Validated) -> Result<Outcome> {
    let raw = &cfg.raw;
    let q = raw.quadrature;
    let setup = Setup {
        cfg,
        radii: radius_grid(
            raw.radii.min,
            raw.radii.max,
            raw.radii.points_per_octave as u32,
        ),
        sphere: SphereRule::new(q.sphere_degree as usize),
        radial: RadialRule::new(2f64.powf(1.0 / q.radial_panels as f64), 8),
    };
    log::info!("task {} over {} radii", raw.task, setup.radii.len());
    match raw.task {
        Task::CurvatureCheck if cfg.source.is_some() => source_check(&setup),
        Task::CurvatureCheck => curvature_check(&setup),
        Task::ComSeries => com_series(&setup),
        Task::MomentsSeries => moments_series(&setup),
        Task::Verdict => verdict(&setup),
        Task::BuildConformal => build_conformal(&setup),
        Task::CmcSeries => cmc_series(&setup),
        Task::HuangGap => gap(&setup),
        Task::HExpansion => expansion(&setup),
    }
}

fn normal(cfg: &Validated) -> Normal {
    match cfg.raw.normal.unwrap_or_default() {
        NormalChoice::Metric => Normal::Metric,
        NormalChoice::Euclidean => Normal::Euclidean,
    }
}

fn max_error(series: &ComSeries) -> f64 {
    series
        .errors
        .iter()
        .flatten()
        .fold(0.0, |m, e| m.max(e.abs()))
}

fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn scaled(r: f64, d: &Vec3) -> Vec3 {
    d.map(|c| r * c)
}

/// Scalar curvature by both routes at every radius and probe direction.
fn curvature_check(s: &Setup) -> Result<Outcome> {
    let spec = s.metric();
    let dirs = SphereRule::new(4).nodes().to_vec();
    let rows: Vec<Vec<[f64; 6]>> = s
        .radii
        .par_iter()
        .map(|&r| {
            dirs.iter()
                .map(|d| {
                    let x = scaled(r, d);
                    let a = scalar_curvature_at(spec, &x)?;
                    let b = scalar_curvature_general(spec, &x)?;
                    Ok([r, x[0], x[1], x[2], a, b])
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from("r,x,y,z,scalar,scalar_general,difference\n");
    let (mut worst, mut min_r) = (0.0f64, f64::INFINITY);
    for row in rows.iter().flatten() {
        let diff = row[4] - row[5];
        worst = worst.max(diff.abs());
        min_r = min_r.min(row[4]);
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            row[0], row[1], row[2], row[3], row[4], row[5], diff
        );
    }
    let mut out = Outcome::default();
    out.file("curvature.csv", csv);
    out.note("samples", rows.iter().map(Vec::len).sum::<usize>());
    out.note("minScalarCurvature", min_r);
    out.error_estimates
        .insert("maxRouteDifference".into(), worst);
    Ok(out)
}

/// Moments of the prescribed source and the remainder of its Newtonian
/// potential after the monopole.
fn source_check(s: &Setup) -> Result<Outcome> {
    let src = s.source().clone();
    let ctl = PotentialControls {
        radial: s.radial,
        ..PotentialControls::default()
    };
    let field = PotentialField::new(src.clone(), ctl.clone())?;
    let dirs = SphereRule::new(4).nodes().to_vec();
    let rows: Vec<[f64; 6]> = s
        .radii
        .par_iter()
        .map(|&r| {
            let mut sup: f64 = 0.0;
            for d in &dirs {
                sup = sup.max(field.remainder(&scaled(r, d))?.abs());
            }
            let mo = [0, 1, 2].map(|a| first_moment(&src, r, a, &ctl));
            Ok([r, mo[0], mo[1], mo[2], sup, r * r * sup])
        })
        .collect::<Result<_>>()?;

    let mut csv = String::from("r,moment1,moment2,moment3,remainder_sup,scaled_remainder\n");
    for row in &rows {
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            row[0], row[1], row[2], row[3], row[4], row[5]
        );
    }
    let mut out = Outcome::default();
    out.file("source.csv", csv);
    out.note("monopoleCoefficient", field.mass());
    out.error_estimates
        .insert("monopoleCoefficient".into(), field.mass_error());
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[5])).collect();
    out.note(
        "maxScaledRemainder",
        pts.iter().fold(0.0f64, |m, p| m.max(p.1)),
    );
    out.note("maxRemainder", rows.iter().fold(0.0f64, |m, r| m.max(r[4])));
    if let Some(p) = loglog_slope(&pts) {
        out.note("scaledRemainderSlope", p);
    }
    if let SourceSpec::OscillatoryDipole { b, .. } = &src {
        // the dipole part of the source has first moment (4 pi b / 3) sin log r
        let base = [0, 1, 2].map(|a| first_moment(&src, E, a, &ctl));
        let amp = 4.0 * PI / 3.0 * b.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mut dev: f64 = 0.0;
        for row in &rows {
            for a in 0..3 {
                let model = 4.0 * PI * b[a] / 3.0 * (row[0].ln().sin() - 1f64.sin());
                dev = dev.max((row[1 + a] - base[a] - model).abs());
            }
        }
        if amp > 0.0 {
            out.note("momentModelDeviation", dev / amp);
        }
    }
    Ok(out)
}

fn com_series(s: &Setup) -> Result<Outcome> {
    let series = ComSeries::compute(s.metric(), &s.radii, &s.sphere, normal(s.cfg))?;
    let mut out = Outcome::default();
    out.file("series.csv", series.to_csv());
    let last = *series.values.last().expect("nonempty grid");
    out.note("finalRadius", *series.radii.last().unwrap());
    out.note("finalCenter", json!(last));
    out.error_estimates
        .insert("quadrature".into(), max_error(&series));
    Ok(out)
}

fn verdict(s: &Setup) -> Result<Outcome> {
    let series = ComSeries::compute(s.metric(), &s.radii, &s.sphere, normal(s.cfg))?;
    let v = limit_verdict(&series)?;
    let mut out = Outcome::default();
    out.file("series.csv", series.to_csv());
    out.file("verdict.json", pretty(&v));
    out.error_estimates
        .insert("quadrature".into(), max_error(&series));
    out.verdicts
        .insert("center".into(), serde_json::to_value(&v).unwrap());
    Ok(out)
}

/// Flux differences against scalar-curvature moments over `[r1, outer]`.
/// `K` for an octave `[r1, 2 r1]` is the largest `r |discrepancy|` sampled in
/// it.
fn moments_series(s: &Setup) -> Result<Outcome> {
    let spec = s.metric();
    let outer = s.cfg.raw.outer_radius.expect("validated");
    let m = spec.mass();
    let c_out = c_cs_flat_at(spec, outer, &s.sphere)?;
    let rows: Vec<(f64, [f64; 3], [f64; 3], f64)> = s
        .radii
        .par_iter()
        .map(|&r1| {
            let c_in = c_cs_flat_at(spec, r1, &s.sphere)?;
            let mom = scalar_moments_annulus(spec, r1, outer, &s.sphere, &s.radial)?;
            let flux = [0, 1, 2].map(|a| 16.0 * PI * m * (c_out[a] - c_in[a]));
            let err = mom.error.iter().fold(0.0f64, |a, e| a.max(e.abs()));
            Ok((r1, flux, mom.value, err))
        })
        .collect::<Result<_>>()?;
    let mut csv = String::from(
        "r_inner,r_outer,flux1,flux2,flux3,moment1,moment2,moment3,discrepancy,scaled_discrepancy\n",
    );
    let mut scaled = Vec::new();
    let mut worst_err: f64 = 0.0;
    for (r1, flux, mom, err) in &rows {
        let d = (0..3).map(|a| (flux[a] - mom[a]).abs()).fold(0.0, f64::max);
        scaled.push(r1 * d);
        worst_err = worst_err.max(*err);
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r1,
            outer,
            flux[0],
            flux[1],
            flux[2],
            mom[0],
            mom[1],
            mom[2],
            d,
            r1 * d
        );
    }
    let ppo = s.cfg.raw.radii.points_per_octave as usize;
    let blocks: Vec<f64> = (0..scaled.len())
        .step_by(ppo)
        .filter(|i| i + ppo < scaled.len())
        .map(|i| scaled[i..=i + ppo].iter().cloned().fold(0.0, f64::max))
        .collect();
    let mut out = Outcome::default();
    out.file("moments.csv", csv);
    out.note(
        "maxScaledDiscrepancy",
        scaled.iter().cloned().fold(0.0, f64::max),
    );
    if !blocks.is_empty() {
        let lo = blocks.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = blocks.iter().cloned().fold(0.0, f64::max);
        out.note("octaveConstants", json!(blocks));
        out.note("octaveConstantRatio", hi / lo);
    }
    out.error_estimates
        .insert("momentQuadrature".into(), worst_err);
    Ok(out)
}

fn build_conformal(s: &Setup) -> Result<Outcome> {
    let src = s.source();
    let a = s.cfg.raw.coupling.unwrap_or(1.0);
    let ctl = PicardControls {
        radial: s.radial,
        validation_points: s.cfg.raw.sample_points.unwrap_or(20) as usize,
        ..PicardControls::default()
    };
    let sol = picard_solve(src, a, &ctl)?;
    let metric = build_counterexample_metric(&sol);
    let sup_k = src.sampled_sup();

    let pts = validation_points(ctl.validation_points);
    let checks: Vec<[f64; 5]> = pts
        .par_iter()
        .map(|x| {
            let r = scalar_curvature_at(&metric, x)?;
            let ak = sol.coupling * src.density(x);
            Ok([x[0], x[1], x[2], r, ak])
        })
        .collect::<Result<_>>()?;
    let mut vcsv = String::from("x,y,z,scalar,coupling_times_source,relative_error\n");
    let mut worst_rel: f64 = 0.0;
    for c in &checks {
        let rel = (c[3] - c[4]).abs() / c[4].abs().max(1e-300);
        worst_rel = worst_rel.max(rel);
        let _ = writeln!(
            vcsv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            c[0], c[1], c[2], c[3], c[4], rel
        );
    }

    let adm = adm_mass_at(&metric, 100.0, &s.sphere)?;
    let series = ComSeries::compute(&metric, &s.radii, &s.sphere, Normal::Metric)?;
    let min_r = s
        .radii
        .par_iter()
        .map(|&r| {
            let mut m = f64::INFINITY;
            for z in s.sphere.nodes() {
                m = m.min(scalar_curvature_at(&metric, &scaled(r, z))?);
            }
            Ok(m)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .chain(checks.iter().map(|c| c[3]))
        .fold(f64::INFINITY, f64::min);
    let v = limit_verdict(&series)?;

    let mut out = Outcome::default();
    out.file("metric.json", pretty(&metric));
    out.file("solution.csv", sol.to_csv());
    out.file("header.json", pretty(&sol.header()));
    out.file("validation.csv", vcsv);
    out.file("series.csv", series.to_csv());
    out.file("verdict.json", pretty(&v));
    out.note("requestedCoupling", sol.requested_coupling);
    out.note("coupling", sol.coupling);
    out.note("iterations", sol.iterations);
    out.note("mass", sol.mass);
    out.note("admMassAt100", adm);
    out.note(
        "admRelativeDifference",
        (adm - sol.mass).abs() / sol.mass.abs(),
    );
    out.note("residual", sol.residual);
    out.note("residualLimit", 1e-5 * sol.coupling * sup_k);
    out.note("maxCurvatureRelativeError", worst_rel);
    out.note("minSampledScalarCurvature", min_r);
    out.error_estimates
        .insert("picardResidual".into(), sol.residual);
    out.error_estimates
        .insert("fluxQuadrature".into(), max_error(&series));
    out.verdicts
        .insert("center".into(), serde_json::to_value(&v).unwrap());
    Ok(out)
}

fn cmc_series(s: &Setup) -> Result<Outcome> {
    let spec = s.metric();
    let lmax = s.cfg.raw.harmonic_degree.unwrap_or(8) as usize;
    let ctl = CmcControls::default();
    let surfaces = solve_cmc_series(spec, &s.radii, lmax, &ctl)?;
    let rule = ctl.rule(lmax);
    let mut csv = String::from("r,tau_x,tau_y,tau_z,c_hy_x,c_hy_y,c_hy_z,residual,psi_sup\n");
    let mut out = Outcome::default();
    let mut worst: f64 = 0.0;
    for (k, surf) in surfaces.iter().enumerate() {
        let res = cmc_residual(spec, surf, &ctl)?;
        worst = worst.max(res * surf.radius / 2.0);
        let c = surf.euclidean_centroid(&rule);
        let t = surf.translation;
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            surf.radius,
            t[0],
            t[1],
            t[2],
            c[0],
            c[1],
            c[2],
            res,
            surf.graph_sup(&rule)
        );
        out.file(&format!("surface-{k:03}.csv"), surf.to_csv());
    }
    out.files.insert(0, ("cmc.csv".into(), csv));
    out.note("harmonicDegree", lmax);
    out.error_estimates.insert("relativeResidual".into(), worst);
    Ok(out)
}

fn gap(s: &Setup) -> Result<Outcome> {
    let lmax = s.cfg.raw.harmonic_degree.unwrap_or(8) as usize;
    let g = huang_gap(
        s.metric(),
        &s.radii,
        lmax,
        &CmcControls::default(),
        &s.sphere,
    )?;
    let mut out = Outcome::default();
    out.file("gap.csv", g.to_csv());
    out.file("gap.json", pretty(&g));
    out.note("gaps", json!(g.gaps));
    out.note("monotoneDecreasing", g.gaps.windows(2).all(|w| w[1] < w[0]));
    if let Some(p) = g.exponent {
        out.note("decayExponent", p);
    }
    Ok(out)
}

fn expansion(s: &Setup) -> Result<Outcome> {
    let tau = s.cfg.raw.translation.unwrap_or([0.0; 3]);
    let reports = s
        .radii
        .iter()
        .map(|&r| h_expansion_check(s.metric(), r, &tau, &s.sphere))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = String::from("r,sup_discrepancy,scaled_discrepancy\n");
    for rep in &reports {
        let _ = writeln!(
            csv,
            "{:.16e},{:.16e},{:.16e}",
            rep.radius, rep.sup_discrepancy, rep.scaled_discrepancy
        );
    }
    let scaled: Vec<f64> = reports.iter().map(|r| r.scaled_discrepancy).collect();
    let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = scaled.iter().cloned().fold(0.0, f64::max);
    let mut out = Outcome::default();
    out.file("expansion.csv", csv);
    out.file("expansion.json", pretty(&reports));
    out.note(
        "scaledDiscrepancyRatio",
        if lo > 0.0 { hi / lo } else { f64::NAN },
    );
    out.note("maxScaledDiscrepancy", hi);
    Ok(out)
}

fn pretty<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// Exit status for a failed computation: 3 for iterative-method failures,
/// 2 for inputs the computation rejected.
pub fn exit_code(e: &Error) -> u8 {
    if e.is_numerical_failure() {
        3
    } else {
        2
    }
}
