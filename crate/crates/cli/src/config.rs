//! Experiment configuration files.

use deadleaves::dlrm::{Dlrm, LeafLaw, MarkKind, TestFunction};
use deadleaves::geom::vec2::{Aabb, Vec2};
use deadleaves::grains::{GrainLaw1D, GrainLaw2D, Law2D};
use deadleaves::noodle::Polyline;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use serde_path_to_error::Segment;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ConfigError {
    /// Malformed JSON, a missing or unknown field, or an invalid value.
    #[error("{0}")]
    Schema(String),
    /// Well-formed but asks for something the library cannot do.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl ConfigError {
    pub fn exit_code(&self) -> u8 {
        match self {
            ConfigError::Schema(_) => 2,
            ConfigError::Unsupported(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Dlm1d,
    Dlm2d,
    Dlrm,
    Noodle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub model: ModelKind,
    /// Leaf dimension; required for `dlrm`, implied otherwise.
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub law: Option<serde_json::Value>,
    #[serde(default)]
    pub mark: Option<MarkKind>,
    #[serde(default)]
    pub window: Vec<f64>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    pub task: Task,
}

fn default_replicates() -> usize {
    1
}

fn default_threshold() -> f64 {
    deadleaves::stats::DEFAULT_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Task {
    Simulate,
    Estimate { statistic: Statistic },
    Verify { statistic: Statistic },
    Evolve(EvolveParams),
    Render(RenderParams),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Estimate { .. } => "estimate",
            Task::Verify { .. } => "verify",
            Task::Evolve(_) => "evolve",
            Task::Render(_) => "render",
        }
    }

    pub fn statistic(&self) -> Option<&Statistic> {
        match self {
            Task::Estimate { statistic } | Task::Verify { statistic } => Some(statistic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    #[default]
    Stationary,
    /// The zero measure; atomic marks only.
    Empty,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveParams {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub start: Start,
    #[serde(default)]
    pub test_function: Option<TestFunction>,
}

fn default_dt() -> f64 {
    0.25
}

fn default_steps() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderParams {
    #[serde(default)]
    pub replicate: u64,
    /// Fill visible cells.
    #[serde(default)]
    pub shade: bool,
    /// Render a saved 1D cell table instead of simulating.
    #[serde(default)]
    pub input: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Curve {
    Segment {
        length: f64,
    },
    Square {
        perimeter: f64,
    },
    Arc {
        length: f64,
        angle: f64,
    },
    Polyline {
        vertices: Vec<Vec2>,
        #[serde(default)]
        closed: bool,
    },
}

impl Curve {
    pub fn build(&self) -> Result<Polyline, ConfigError> {
        let r = match self {
            Curve::Segment { length } => Polyline::segment(*length),
            Curve::Square { perimeter } => Polyline::square(*perimeter),
            Curve::Arc { length, angle } => Polyline::arc(*length, *angle),
            Curve::Polyline { vertices, closed } => Polyline::new(vertices.clone(), *closed),
        };
        r.map_err(|e| ConfigError::Schema(format!("curve: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Statistic {
    BoundaryIntensity,
    PairCorrelation {
        bin_width: f64,
        max_lag: f64,
    },
    AsymptoticVariance,
    IntervalLaws,
    Vacancy {
        h: f64,
    },
    TimeCovariance {
        dt: f64,
        /// Lags are `0, dt, …, lags·dt`.
        lags: usize,
        /// Length of each series in steps of `dt`.
        horizon: usize,
    },
    BranchPoints {
        #[serde(default = "default_cell_tolerance")]
        cell_tolerance: f64,
    },
    MarkIntensity,
    Normality,
    Connectivity {
        #[serde(default = "default_max_fraction")]
        max_fraction: f64,
    },
    ConditionalMean {
        lag: f64,
    },
    Poincare {
        a: Curve,
        b: Curve,
        samples: usize,
    },
    Buffon {
        curve: Curve,
        spacing: f64,
        samples: usize,
    },
}

fn default_cell_tolerance() -> f64 {
    0.05
}

fn default_max_fraction() -> f64 {
    0.05
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::BoundaryIntensity => "boundary_intensity",
            Statistic::PairCorrelation { .. } => "pair_correlation",
            Statistic::AsymptoticVariance => "asymptotic_variance",
            Statistic::IntervalLaws => "interval_laws",
            Statistic::Vacancy { .. } => "vacancy",
            Statistic::TimeCovariance { .. } => "time_covariance",
            Statistic::BranchPoints { .. } => "branch_points",
            Statistic::MarkIntensity => "mark_intensity",
            Statistic::Normality => "normality",
            Statistic::Connectivity { .. } => "connectivity",
            Statistic::ConditionalMean { .. } => "conditional_mean",
            Statistic::Poincare { .. } => "poincare",
            Statistic::Buffon { .. } => "buffon",
        }
    }

    fn models(&self) -> &'static [ModelKind] {
        use ModelKind::*;
        match self {
            Statistic::BoundaryIntensity => &[Dlm1d, Dlm2d],
            Statistic::AsymptoticVariance | Statistic::Normality => &[Dlm1d, Dlm2d, Dlrm],
            Statistic::TimeCovariance { .. } => &[Dlm1d, Dlm2d, Dlrm],
            Statistic::PairCorrelation { .. }
            | Statistic::IntervalLaws
            | Statistic::Vacancy { .. } => &[Dlm1d],
            Statistic::BranchPoints { .. } | Statistic::Connectivity { .. } => &[Dlm2d],
            Statistic::MarkIntensity | Statistic::ConditionalMean { .. } => &[Dlrm],
            Statistic::Poincare { .. } | Statistic::Buffon { .. } => &[Noodle],
        }
    }
}

/// A validated leaf law.
#[derive(Debug, Clone, PartialEq)]
pub enum Law {
    D1(GrainLaw1D),
    D2(Law2D),
}

/// Configuration with its law, mark and window checked.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub law: Option<Law>,
    pub dlrm: Option<Dlrm>,
}

fn schema(msg: impl Into<String>) -> ConfigError {
    ConfigError::Schema(msg.into())
}

fn unsupported(msg: impl Into<String>) -> ConfigError {
    ConfigError::Unsupported(msg.into())
}

/// Tag fields of internally tagged enums; probed last.
const TAGS: [&str; 3] = ["kind", "type", "name"];

fn pointer(path: &[String]) -> String {
    path.iter().map(|k| format!("/{k}")).collect()
}

/// Deserializes `value`, naming the offending field on failure. Internally
/// tagged enums hide the path inside them, so the error is narrowed further by
/// removing one key at a time until the message changes.
fn deserialize_located<T: DeserializeOwned>(value: &Value) -> Result<T, (Vec<String>, String)> {
    let err = match serde_path_to_error::deserialize::<_, T>(value) {
        Ok(t) => return Ok(t),
        Err(e) => e,
    };
    let msg = err.inner().to_string();
    let mut path: Vec<String> = err
        .path()
        .iter()
        .filter_map(|s| match s {
            Segment::Map { key } => Some(key.clone()),
            Segment::Seq { index } => Some(index.to_string()),
            _ => None,
        })
        .collect();
    let same = |v: &Value| {
        serde_json::from_value::<T>(v.clone())
            .err()
            .map(|e| e.to_string())
            == Some(msg.clone())
    };
    'descend: while let Some(Value::Object(obj)) = value.pointer(&pointer(&path)) {
        let mut keys: Vec<&String> = obj.keys().filter(|k| !TAGS.contains(&k.as_str())).collect();
        keys.extend(obj.keys().filter(|k| TAGS.contains(&k.as_str())));
        for k in keys {
            let mut probe = value.clone();
            if let Some(Value::Object(o)) = probe.pointer_mut(&pointer(&path)) {
                o.remove(k);
            }
            if !same(&probe) {
                path.push(k.clone());
                continue 'descend;
            }
        }
        break;
    }
    Err((path, msg))
}

fn located(prefix: &[&str], path: Vec<String>, msg: String) -> ConfigError {
    let at: Vec<String> = prefix.iter().map(|s| s.to_string()).chain(path).collect();
    if at.is_empty() {
        schema(msg)
    } else {
        schema(format!("{}: {msg}", at.join(".")))
    }
}

fn parse_at<T: DeserializeOwned>(value: &Value, field: &str) -> Result<T, ConfigError> {
    deserialize_located(value).map_err(|(path, msg)| located(&[field], path, msg))
}

/// Parses and validates a JSON document.
pub fn parse_config(text: &str) -> Result<Experiment, ConfigError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| schema(format!("malformed JSON: {e}")))?;
    let config: ExperimentConfig =
        deserialize_located(&value).map_err(|(path, msg)| located(&[], path, msg))?;
    validate(config)
}

pub fn validate(config: ExperimentConfig) -> Result<Experiment, ConfigError> {
    if config.name.is_empty()
        || !config
            .name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    {
        return Err(schema(
            "name: must be non-empty and use only letters, digits, '-' and '_'",
        ));
    }
    if config.replicates == 0 {
        return Err(schema("replicates: must be at least 1"));
    }
    if !(config.threshold > 0.0 && config.threshold.is_finite()) {
        return Err(schema("threshold: must be positive"));
    }
    let dim = match (config.model, config.dim) {
        (ModelKind::Dlm1d, None | Some(1)) => Some(1),
        (ModelKind::Dlm2d, None | Some(2)) => Some(2),
        (ModelKind::Dlrm, Some(d @ (1 | 2))) => Some(d),
        (ModelKind::Dlrm, None) => return Err(schema("dim: required for the dlrm model")),
        (ModelKind::Noodle, None) => None,
        (_, Some(d)) => {
            return Err(unsupported(format!(
                "dimension {d} for model {:?}",
                config.model
            )))
        }
    };
    let law = match (dim, &config.law) {
        (None, None) => None,
        (None, Some(_)) => return Err(schema("law: not used by the noodle model")),
        (Some(_), None) => return Err(schema("law: missing field")),
        (Some(1), Some(v)) => {
            let l: GrainLaw1D = parse_at(v, "law")?;
            l.validate().map_err(|e| schema(format!("law: {e}")))?;
            Some(Law::D1(l))
        }
        (Some(_), Some(v)) => {
            let l: GrainLaw2D = parse_at(v, "law")?;
            Some(Law::D2(l.build().map_err(|e| schema(format!("law: {e}")))?))
        }
    };
    if let Some(d) = dim {
        if config.window.len() != d {
            return Err(schema(format!(
                "window: expected {d} side length(s), got {}",
                config.window.len()
            )));
        }
        if config.window.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(schema("window: side lengths must be positive and finite"));
        }
    }
    let dlrm = match (config.model, &config.mark, &law) {
        (ModelKind::Dlrm, None, _) => return Err(schema("mark: required for the dlrm model")),
        (ModelKind::Dlrm, Some(m), Some(l)) => {
            let leaf = match l {
                Law::D1(l) => LeafLaw::D1(l.clone()),
                Law::D2(l) => LeafLaw::D2(l.clone()),
            };
            let model = Dlrm::new(leaf, m.clone()).map_err(|e| match e {
                deadleaves::dlrm::DlrmError::Mark(deadleaves::dlrm::MarkError::Invalid(s)) => {
                    schema(format!("mark: {s}"))
                }
                other => unsupported(format!("mark: {other}")),
            })?;
            Some(model)
        }
        (_, Some(_), _) => return Err(schema("mark: only used by the dlrm model")),
        _ => None,
    };
    if let Some(s) = config.task.statistic() {
        if !s.models().contains(&config.model) {
            return Err(unsupported(format!(
                "statistic {} for model {:?}",
                s.name(),
                config.model
            )));
        }
        check_statistic(s)?;
    }
    match &config.task {
        Task::Evolve(p) => {
            if !(p.dt > 0.0 && p.dt.is_finite()) || p.steps == 0 {
                return Err(schema("task.dt: must be positive with at least one step"));
            }
            if config.model == ModelKind::Noodle {
                return Err(unsupported("evolve for the noodle model"));
            }
            if p.start == Start::Empty
                && !matches!(
                    config.mark,
                    Some(MarkKind::Seeds { .. } | MarkKind::CornerCounting)
                )
            {
                return Err(unsupported("empty start needs a seeds or corner mark"));
            }
            if let (Some(f), Some(d)) = (&p.test_function, dim) {
                f.validate(d)
                    .map_err(|e| schema(format!("task.test_function: {e}")))?;
            }
        }
        Task::Render(p) => {
            if config.model == ModelKind::Noodle || config.model == ModelKind::Dlrm {
                return Err(unsupported("render supports the dlm1d and dlm2d models"));
            }
            if p.input.is_some() && config.model != ModelKind::Dlm1d {
                return Err(unsupported("render input tables are 1D cell tables"));
            }
        }
        Task::Simulate if config.model == ModelKind::Noodle => {
            return Err(unsupported("simulate for the noodle model"))
        }
        _ => {}
    }
    Ok(Experiment { config, law, dlrm })
}

fn check_statistic(s: &Statistic) -> Result<(), ConfigError> {
    let pos = |v: f64, f: &str| {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(schema(format!("task.statistic.{f}: must be positive")))
        }
    };
    match s {
        Statistic::PairCorrelation { bin_width, max_lag } => {
            pos(*bin_width, "bin_width")?;
            pos(*max_lag, "max_lag")?;
            if max_lag / bin_width > 10_000.0 {
                return Err(schema("task.statistic.bin_width: too many bins"));
            }
        }
        Statistic::Vacancy { h } => pos(*h, "h")?,
        Statistic::TimeCovariance { dt, lags, horizon } => {
            pos(*dt, "dt")?;
            if *lags == 0 || horizon <= lags {
                return Err(schema(
                    "task.statistic.horizon: must exceed lags, with lags ≥ 1",
                ));
            }
        }
        Statistic::BranchPoints { cell_tolerance } => pos(*cell_tolerance, "cell_tolerance")?,
        Statistic::Connectivity { max_fraction } => pos(*max_fraction, "max_fraction")?,
        Statistic::ConditionalMean { lag } => pos(*lag, "lag")?,
        Statistic::Poincare { a, b, samples } => {
            a.build()?;
            b.build()?;
            if *samples < deadleaves::noodle::MIN_SAMPLES {
                return Err(schema("task.statistic.samples: need at least 1000"));
            }
        }
        Statistic::Buffon {
            curve,
            spacing,
            samples,
        } => {
            curve.build()?;
            pos(*spacing, "spacing")?;
            if *samples < deadleaves::noodle::MIN_SAMPLES {
                return Err(schema("task.statistic.samples: need at least 1000"));
            }
        }
        _ => {}
    }
    Ok(())
}

impl Experiment {
    pub fn law_1d(&self) -> Option<&GrainLaw1D> {
        match &self.law {
            Some(Law::D1(l)) => Some(l),
            _ => None,
        }
    }

    pub fn law_2d(&self) -> Option<&Law2D> {
        match &self.law {
            Some(Law::D2(l)) => Some(l),
            _ => None,
        }
    }

    pub fn window_2d(&self) -> Aabb {
        let w = &self.config.window;
        Aabb::new(Vec2::ZERO, Vec2::new(w[0], w[1]))
    }

    pub fn window_measure(&self) -> f64 {
        self.config.window.iter().product()
    }
}
