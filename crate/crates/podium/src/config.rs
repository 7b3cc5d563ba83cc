//! Run configuration: TOML file values, overridden by command-line flags.

use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use podium_core::metrics::{CustomMetric, Sample};
use podium_core::{BootstrapPlan, Correction, Direction, FamilyPolicy, Metric, ScoreSpec, TaskKind};
use serde::{Deserialize, Serialize};

use crate::error::{PodiumError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Md,
    Csv,
    Svg,
}

impl Format {
    pub const ALL: [Format; 4] = [Format::Json, Format::Md, Format::Csv, Format::Svg];

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "json" => Some(Format::Json),
            "md" | "markdown" => Some(Format::Md),
            "csv" => Some(Format::Csv),
            "svg" => Some(Format::Svg),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: PathBuf,
    pub gold_col: String,
    /// `accuracy`, `f1:<class>`, `macro-f1:<c1,c2,...>`, `mae` or
    /// `custom:<path>`. Unset picks accuracy for labels and MAE for numbers.
    pub metric: Option<String>,
    pub direction: Option<String>,
    pub samples: usize,
    pub seed: u64,
    pub alpha: f64,
    pub confidence: f64,
    pub corrections: Vec<String>,
    pub family: String,
    /// Empty disables gold-alias exclusion.
    pub gold_alias: String,
    pub out_dir: PathBuf,
    pub formats: Vec<String>,
    pub workers: Option<usize>,
    pub task: Option<String>,
    /// Histogram bins; unset uses the square-root rule.
    pub bins: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: PathBuf::new(),
            gold_col: crate::csvio::DEFAULT_GOLD_COLUMN.into(),
            metric: None,
            direction: None,
            samples: 10_000,
            seed: 0,
            alpha: 0.05,
            confidence: 0.95,
            corrections: vec!["bonferroni".into(), "holm".into(), "bh".into()],
            family: "per-reference".into(),
            gold_alias: podium_core::analysis::DEFAULT_GOLD_ALIAS.into(),
            out_dir: PathBuf::from("podium-out"),
            formats: Format::ALL.iter().map(|f| format!("{f:?}").to_lowercase()).collect(),
            workers: None,
            task: None,
            bins: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PodiumError::io(crate::error::Stage::Config, path, e))?;
        toml::from_str(&text).map_err(|e| PodiumError::Config(format!("{}: {e}", path.display())))
    }

    pub fn plan(&self) -> Result<BootstrapPlan> {
        let plan = BootstrapPlan {
            replicates: self.samples,
            confidence: self.confidence,
            seed: self.seed,
            alpha: self.alpha,
            workers: self.workers,
        };
        plan.check().map_err(|e| PodiumError::Config(e.to_string()))?;
        Ok(plan)
    }

    pub fn task(&self) -> Result<Option<TaskKind>> {
        match self.task.as_deref().map(str::trim) {
            None | Some("") | Some("auto") => Ok(None),
            Some("classification") => Ok(Some(TaskKind::Classification)),
            Some("regression") => Ok(Some(TaskKind::Regression)),
            Some(other) => Err(PodiumError::Config(format!("unknown task `{other}`"))),
        }
    }

    /// Task used when loading: the explicit one, else the one implied by a
    /// built-in metric, else `None` (inferred from the columns). Label codes
    /// such as 0/1 are numeric, so `f1:1` alone has to decide this.
    pub fn load_task(&self) -> Result<Option<TaskKind>> {
        if let Some(t) = self.task()? {
            return Ok(Some(t));
        }
        let Some(metric) = &self.metric else { return Ok(None) };
        Ok(match parse_metric(metric, None).map(|s| s.metric) {
            Ok(Metric::Accuracy | Metric::F1(_) | Metric::MacroF1(_)) => Some(TaskKind::Classification),
            Ok(Metric::Mae) => Some(TaskKind::Regression),
            _ => None,
        })
    }

    pub fn corrections(&self) -> Result<Vec<Correction>> {
        let mut out = BTreeSet::new();
        for c in &self.corrections {
            let c = Correction::parse(c).ok_or_else(|| PodiumError::Config(format!("unknown correction `{c}`")))?;
            if c != Correction::None {
                out.insert(c);
            }
        }
        Ok(out.into_iter().collect())
    }

    pub fn family(&self) -> Result<FamilyPolicy> {
        FamilyPolicy::parse(&self.family).ok_or_else(|| PodiumError::Config(format!("unknown family policy `{}`", self.family)))
    }

    pub fn formats(&self) -> Result<BTreeSet<Format>> {
        let out = self
            .formats
            .iter()
            .map(|f| Format::parse(f).ok_or_else(|| PodiumError::Config(format!("unknown format `{f}`"))))
            .collect::<Result<BTreeSet<_>>>()?;
        if out.is_empty() {
            return Err(PodiumError::Config("no output formats".into()));
        }
        Ok(out)
    }

    pub fn gold_alias(&self) -> Option<String> {
        (!self.gold_alias.is_empty()).then(|| self.gold_alias.clone())
    }

    /// Resolve the metric for a table of kind `task`. Relative custom-metric
    /// paths are taken as given (relative to the working directory).
    pub fn score_spec(&self, task: TaskKind) -> Result<ScoreSpec> {
        let direction = self.direction.as_deref().map(parse_direction).transpose()?;
        let metric = match (&self.metric, task) {
            (Some(m), _) => m.clone(),
            (None, TaskKind::Classification) => "accuracy".into(),
            (None, TaskKind::Regression) => "mae".into(),
        };
        parse_metric(&metric, direction)
    }
}

pub fn parse_direction(s: &str) -> Result<Direction> {
    match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
        "higher" | "higher-better" | "max" => Ok(Direction::HigherBetter),
        "lower" | "lower-better" | "min" => Ok(Direction::LowerBetter),
        other => Err(PodiumError::Config(format!("unknown direction `{other}`"))),
    }
}

/// Parse a metric argument. Built-in metrics have a fixed direction;
/// `direction` may only restate it. Custom metrics take theirs from the
/// file unless `direction` is given.
pub fn parse_metric(arg: &str, direction: Option<Direction>) -> Result<ScoreSpec> {
    let arg = arg.trim();
    let (head, rest) = match arg.split_once(':') {
        Some((h, r)) => (h.trim().to_ascii_lowercase(), Some(r)),
        None => (arg.to_ascii_lowercase(), None),
    };
    let list = |r: Option<&str>| -> Result<Vec<String>> {
        let items: Vec<String> = r
            .unwrap_or("")
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        if items.is_empty() {
            return Err(PodiumError::Config(format!("`{arg}` names no classes")));
        }
        Ok(items)
    };
    let spec = match (head.as_str(), rest) {
        ("accuracy", None) => ScoreSpec::accuracy(),
        ("mae", None) => ScoreSpec::mae(),
        ("f1", r) => {
            let c = list(r)?;
            if c.len() != 1 {
                return Err(PodiumError::Config(format!("`{arg}`: f1 takes one class; use macro-f1 for several")));
            }
            ScoreSpec::f1(&c[0])
        }
        ("macro-f1" | "macro_f1" | "macrof1", r) => ScoreSpec::macro_f1(&list(r)?),
        ("custom", Some(path)) => {
            let mut spec = load_custom_metric(Path::new(path.trim()))?;
            if let Some(d) = direction {
                spec.direction = d;
            }
            return Ok(spec);
        }
        _ => return Err(PodiumError::Config(format!("unknown metric `{arg}`"))),
    };
    match direction {
        Some(d) if d != spec.direction => Err(PodiumError::Config(format!(
            "{} is {}; only custom metrics take another direction",
            spec.metric,
            spec.direction.as_str()
        ))),
        _ => Ok(spec),
    }
}

/// A custom metric file: the score is the mean, over rows, of the gain
/// listed for each (gold, prediction) pair, or `default` for unlisted pairs.
///
/// ```toml
/// name = "weighted"
/// direction = "higher-better"
/// capped_at_one = true
/// default = 0.0
///
/// [[gain]]
/// gold = "FAVOR"
/// pred = "FAVOR"
/// value = 1.0
/// ```
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainMetricFile {
    pub name: String,
    #[serde(default = "default_direction")]
    pub direction: String,
    #[serde(default)]
    pub capped_at_one: bool,
    #[serde(default)]
    pub default: f64,
    #[serde(default)]
    pub gain: Vec<Gain>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gain {
    pub gold: String,
    pub pred: String,
    pub value: f64,
}

fn default_direction() -> String {
    "higher-better".into()
}

pub fn load_custom_metric(path: &Path) -> Result<ScoreSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| PodiumError::io(crate::error::Stage::Config, path, e))?;
    let file: GainMetricFile =
        toml::from_str(&text).map_err(|e| PodiumError::Config(format!("{}: {e}", path.display())))?;
    gain_metric(file)
}

pub fn gain_metric(file: GainMetricFile) -> Result<ScoreSpec> {
    let direction = parse_direction(&file.direction)?;
    if !file.default.is_finite() || file.gain.iter().any(|g| !g.value.is_finite()) {
        return Err(PodiumError::Config(format!("custom metric `{}` has a non-finite gain", file.name)));
    }
    let table: HashMap<(String, String), f64> =
        file.gain.into_iter().map(|g| ((g.gold.trim().to_string(), g.pred.trim().to_string()), g.value)).collect();
    let default = file.default;
    let metric = CustomMetric::new(&file.name, move |gold, pred| {
        let lookup = |g: String, p: String| *table.get(&(g, p)).unwrap_or(&default);
        let n = gold.len();
        let total: f64 = match (gold, pred) {
            (Sample::Labels { codes: g, labels }, Sample::Labels { codes: p, .. }) => g
                .iter()
                .zip(p)
                .map(|(&a, &b)| lookup(labels[a as usize].clone(), labels[b as usize].clone()))
                .sum(),
            (Sample::Values(g), Sample::Values(p)) => {
                g.iter().zip(p).map(|(a, b)| lookup(a.to_string(), b.to_string())).sum()
            }
            _ => f64::NAN,
        };
        total / n as f64
    });
    Ok(ScoreSpec::custom(metric, direction, file.capped_at_one))
}
