use com_lab::geometry::{MetricSpec, MetricSpecJson, Vec3};
use com_lab::prescription::SourceSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    CurvatureCheck,
    ComSeries,
    MomentsSeries,
    Verdict,
    BuildConformal,
    CmcSeries,
    HuangGap,
    HExpansion,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        write!(f, "{}", v.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RadiiConfig {
    pub min: f64,
    pub max: f64,
    pub points_per_octave: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QuadratureConfig {
    #[serde(default = "default_sphere_degree")]
    pub sphere_degree: i64,
    /// Radial panels per octave.
    #[serde(default = "default_radial_panels")]
    pub radial_panels: i64,
}

fn default_sphere_degree() -> i64 {
    16
}

fn default_radial_panels() -> i64 {
    4
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            sphere_degree: default_sphere_degree(),
            radial_panels: default_radial_panels(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalChoice {
    #[default]
    Metric,
    Euclidean,
}

/// One experiment. `metric` and `source` stay raw JSON until validation so
/// that their problems are reported per field.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    #[serde(default)]
    pub metric: Option<Value>,
    #[serde(default)]
    pub source: Option<Value>,
    pub radii: RadiiConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    /// Path prefix for every artifact, relative to the output directory.
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub normal: Option<NormalChoice>,
    /// Outer radius of the moment annulus.
    #[serde(default)]
    pub outer_radius: Option<f64>,
    /// Coupling `a` of the prescription problem.
    #[serde(default)]
    pub coupling: Option<f64>,
    /// Highest harmonic degree of the surface perturbation.
    #[serde(default)]
    pub harmonic_degree: Option<i64>,
    #[serde(default)]
    pub translation: Option<Vec3>,
    /// Number of spot-check points.
    #[serde(default)]
    pub sample_points: Option<i64>,
}

/// A config whose every field has been checked.
#[derive(Debug, Clone)]
pub struct Validated {
    pub raw: ExperimentConfig,
    pub metric: Option<MetricSpec>,
    pub source: Option<SourceSpec>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, Vec<String>> {
        serde_json::from_str(text).map_err(|e| vec![format!("config: {e}")])
    }

    pub fn prefix(&self) -> String {
        self.output.clone().unwrap_or_else(|| self.task.to_string())
    }

    pub fn validate(&self) -> Result<Validated, Vec<String>> {
        let mut errs = Vec::new();
        let metric = self.metric.as_ref().and_then(|v| {
            match serde_json::from_value::<MetricSpecJson>(v.clone()) {
                Err(e) => {
                    errs.push(format!("metric: {e}"));
                    None
                }
                Ok(j) => {
                    let d = j.diagnostics("metric");
                    if d.is_empty() {
                        MetricSpec::try_from(j).ok()
                    } else {
                        errs.extend(d);
                        None
                    }
                }
            }
        });
        let source = self.source.as_ref().and_then(|v| {
            match serde_json::from_value::<SourceSpec>(v.clone()) {
                Err(e) => {
                    errs.push(format!("source: {e}"));
                    None
                }
                Ok(s) => {
                    let d = s.validate();
                    if d.is_empty() {
                        Some(s)
                    } else {
                        errs.extend(d);
                        None
                    }
                }
            }
        });
        self.check_fields(&mut errs);
        if let Some(m) = &metric {
            let needs_mass = matches!(
                self.task,
                Task::ComSeries | Task::MomentsSeries | Task::Verdict | Task::HuangGap
            );
            if needs_mass && m.mass() == 0.0 {
                errs.push(format!(
                    "metric.m: must be nonzero for task '{}'",
                    self.task
                ));
            }
        }
        if errs.is_empty() {
            Ok(Validated {
                raw: self.clone(),
                metric,
                source,
            })
        } else {
            Err(errs)
        }
    }

    fn check_fields(&self, errs: &mut Vec<String>) {
        let task = self.task;
        let r = &self.radii;
        if !(r.min > 0.0 && r.min.is_finite()) {
            errs.push(format!(
                "radii.min: must be positive and finite, got {}",
                r.min
            ));
        }
        if !(r.max >= r.min && r.max.is_finite()) {
            errs.push(format!(
                "radii.max: must be finite and >= radii.min, got {}",
                r.max
            ));
        }
        if r.points_per_octave < 1 {
            errs.push(format!(
                "radii.pointsPerOctave: must be >= 1, got {}",
                r.points_per_octave
            ));
        }
        let q = &self.quadrature;
        if q.sphere_degree < 2 {
            errs.push(format!(
                "quadrature.sphereDegree: must be >= 2, got {}",
                q.sphere_degree
            ));
        }
        if q.radial_panels < 1 {
            errs.push(format!(
                "quadrature.radialPanels: must be >= 1, got {}",
                q.radial_panels
            ));
        }
        if let Some(p) = &self.output {
            if p.is_empty() || std::path::Path::new(p).is_absolute() || p.contains("..") {
                errs.push(format!("output: must be a relative path prefix, got '{p}'"));
            }
        }

        let uses_metric = task != Task::BuildConformal;
        let uses_source = matches!(task, Task::BuildConformal | Task::CurvatureCheck);
        match (task, self.metric.is_some(), self.source.is_some()) {
            (Task::CurvatureCheck, true, true) => errs.push(
                "source: give either metric or source for 'curvature-check', not both".into(),
            ),
            (Task::CurvatureCheck, false, false) => {
                errs.push("metric: required for 'curvature-check' unless source is given".into())
            }
            (Task::CurvatureCheck, _, _) => {}
            (_, has_metric, has_source) => {
                if uses_metric && !has_metric {
                    errs.push(format!("metric: required for task '{task}'"));
                }
                if uses_source && !has_source {
                    errs.push(format!("source: required for task '{task}'"));
                }
            }
        }
        if !uses_metric && self.metric.is_some() {
            errs.push(format!("metric: not used by task '{task}'"));
        }
        if !uses_source && self.source.is_some() {
            errs.push(format!("source: not used by task '{task}'"));
        }

        let allowed = |name: &str| -> bool {
            match name {
                "normal" => matches!(task, Task::ComSeries | Task::Verdict),
                "outerRadius" => task == Task::MomentsSeries,
                "coupling" => task == Task::BuildConformal,
                "harmonicDegree" => matches!(task, Task::CmcSeries | Task::HuangGap),
                "translation" => task == Task::HExpansion,
                "samplePoints" => matches!(task, Task::BuildConformal | Task::CurvatureCheck),
                _ => true,
            }
        };
        let present = [
            ("normal", self.normal.is_some()),
            ("outerRadius", self.outer_radius.is_some()),
            ("coupling", self.coupling.is_some()),
            ("harmonicDegree", self.harmonic_degree.is_some()),
            ("translation", self.translation.is_some()),
            ("samplePoints", self.sample_points.is_some()),
        ];
        for (name, set) in present {
            if set && !allowed(name) {
                errs.push(format!("{name}: not used by task '{task}'"));
            }
        }

        if task == Task::MomentsSeries {
            match self.outer_radius {
                None => errs.push("outerRadius: required for task 'moments-series'".into()),
                Some(o) if !(o > r.max && o.is_finite()) => errs.push(format!(
                    "outerRadius: must be finite and > radii.max, got {o}"
                )),
                _ => {}
            }
        }
        if let Some(a) = self.coupling {
            if !(a > 0.0 && a.is_finite()) {
                errs.push(format!("coupling: must be positive and finite, got {a}"));
            }
        }
        if let Some(l) = self.harmonic_degree {
            if !(4..=32).contains(&l) {
                errs.push(format!("harmonicDegree: must be in 4..=32, got {l}"));
            }
        }
        if let Some(t) = self.translation {
            let n = t.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n.is_nan() || n > 0.5 {
                errs.push(format!("translation: length must be at most 0.5, got {n}"));
            }
        }
        if let Some(n) = self.sample_points {
            if !(1..=10_000).contains(&n) {
                errs.push(format!("samplePoints: must be in 1..=10000, got {n}"));
            }
        }
    }
}

/// Parses and validates, collecting every diagnostic.
pub fn load(text: &str) -> Result<Validated, Vec<String>> {
    ExperimentConfig::parse(text)?.validate()
}
