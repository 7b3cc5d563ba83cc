//! Performance scores of one prediction vector against gold.
//!
//! Classification metrics are all functions of the confusion matrix:
//!
//! * accuracy = correct / n
//! * F1 of class c = 2·tp / (2·tp + fp + fn)
//! * macro F1 over a subset S = mean of the per-class F1 over S only. Labels
//!   outside S still feed the fp/fn of the classes in S.
//!
//! MAE is `(1/n)·Σ|gold − pred|`. Anything else plugs in through
//! [`CustomMetric`].

use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::data::{Column, Outcome, PredictionTable, RawTable, TaskKind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl Direction {
    /// Maps a raw score difference to "positive means better".
    #[inline]
    pub fn orient(self, diff: f64) -> f64 {
        match self {
            Direction::HigherBetter => diff,
            Direction::LowerBetter => -diff,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::HigherBetter => "higher_better",
            Direction::LowerBetter => "lower_better",
        }
    }
}

/// What to do with a class whose F1 has a zero denominator
/// (`tp = fp = fn = 0`, e.g. absent from a bootstrap resample).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EmptyClass {
    /// F1 = 0 and the class stays in the macro average.
    #[default]
    Zero,
    /// The class is dropped from the macro average.
    Exclude,
}

/// A view of one resampled column handed to custom metrics.
#[derive(Clone, Copy, Debug)]
pub enum Sample<'a> {
    Labels { codes: &'a [u32], labels: &'a [String] },
    Values(&'a [f64]),
}

impl Sample<'_> {
    pub fn len(&self) -> usize {
        match self {
            Sample::Labels { codes, .. } => codes.len(),
            Sample::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

type ScoreFn = dyn Fn(Sample<'_>, Sample<'_>) -> f64 + Send + Sync;

/// A user-supplied scoring function over `(gold, pred)`.
#[derive(Clone)]
pub struct CustomMetric {
    name: String,
    func: Arc<ScoreFn>,
}

impl CustomMetric {
    pub fn new(
        name: &str,
        func: impl Fn(Sample<'_>, Sample<'_>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        CustomMetric { name: name.to_string(), func: Arc::new(func) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn call(&self, gold: Sample<'_>, pred: Sample<'_>) -> f64 {
        (self.func)(gold, pred)
    }
}

impl fmt::Debug for CustomMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMetric").field("name", &self.name).finish()
    }
}

impl PartialEq for CustomMetric {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.func, &other.func)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    Accuracy,
    F1(String),
    MacroF1(Vec<String>),
    Mae,
    Custom(CustomMetric),
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Accuracy => f.write_str("accuracy"),
            Metric::F1(c) => write!(f, "f1:{c}"),
            Metric::MacroF1(cs) => write!(f, "macro-f1:{}", cs.join(",")),
            Metric::Mae => f.write_str("mae"),
            Metric::Custom(c) => write!(f, "custom:{}", c.name()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreSpec {
    pub metric: Metric,
    pub direction: Direction,
    /// The metric's ideal value is 1 (needed for PPI).
    pub capped_at_one: bool,
    pub empty_class: EmptyClass,
}

impl ScoreSpec {
    pub fn accuracy() -> Self {
        Self::higher(Metric::Accuracy)
    }

    pub fn f1(label: &str) -> Self {
        Self::higher(Metric::F1(label.to_string()))
    }

    pub fn macro_f1<S: AsRef<str>>(labels: &[S]) -> Self {
        Self::higher(Metric::MacroF1(
            labels.iter().map(|l| l.as_ref().trim().to_string()).collect(),
        ))
    }

    pub fn mae() -> Self {
        ScoreSpec {
            metric: Metric::Mae,
            direction: Direction::LowerBetter,
            capped_at_one: false,
            empty_class: EmptyClass::Zero,
        }
    }

    pub fn custom(metric: CustomMetric, direction: Direction, capped_at_one: bool) -> Self {
        ScoreSpec {
            metric: Metric::Custom(metric),
            direction,
            capped_at_one,
            empty_class: EmptyClass::Zero,
        }
    }

    fn higher(metric: Metric) -> Self {
        ScoreSpec {
            metric,
            direction: Direction::HigherBetter,
            capped_at_one: true,
            empty_class: EmptyClass::Zero,
        }
    }

    pub fn with_empty_class(mut self, policy: EmptyClass) -> Self {
        self.empty_class = policy;
        self
    }

    /// Table-independent checks.
    pub fn check(&self) -> Result<()> {
        match &self.metric {
            Metric::MacroF1(s) if s.is_empty() => Err(Error::InvalidSpec("macro-F1 subset is empty")),
            Metric::Mae if self.direction != Direction::LowerBetter => {
                Err(Error::InvalidSpec("MAE must be lower-is-better"))
            }
            Metric::Mae if self.capped_at_one => Err(Error::InvalidSpec("MAE has no cap at one")),
            _ => Ok(()),
        }
    }
}

/// Per-label true positives, false positives and false negatives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

/// Square confusion matrix indexed `[gold][pred]` by label code.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConfusionMatrix {
    k: usize,
    cells: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        ConfusionMatrix { k, cells: vec![0; k * k] }
    }

    pub fn from_codes(k: usize, gold: &[u32], pred: &[u32]) -> Self {
        let mut m = Self::zeros(k);
        for (&g, &p) in gold.iter().zip(pred) {
            m.cells[g as usize * k + p as usize] += 1;
        }
        m
    }

    pub fn labels(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, gold: usize, pred: usize) -> u64 {
        self.cells[gold * self.k + pred]
    }

    #[inline]
    pub fn add(&mut self, gold: usize, pred: usize, delta: i64) {
        let cell = &mut self.cells[gold * self.k + pred];
        *cell = (*cell as i64 + delta) as u64;
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.k).map(|c| self.get(c, c)).sum()
    }

    pub fn counts(&self, label: usize) -> ConfusionCounts {
        let tp = self.get(label, label);
        let col: u64 = (0..self.k).map(|g| self.get(g, label)).sum();
        let row: u64 = (0..self.k).map(|p| self.get(label, p)).sum();
        ConfusionCounts { tp, fp: col - tp, fn_: row - tp }
    }
}

#[inline]
fn f1(tp: f64, fp: f64, fn_: f64) -> Option<f64> {
    let denom = 2.0 * tp + fp + fn_;
    if denom == 0.0 {
        None
    } else {
        Some(2.0 * tp / denom)
    }
}

fn macro_mean(parts: impl Iterator<Item = Option<f64>>, policy: EmptyClass) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for part in parts {
        match (part, policy) {
            (Some(v), _) => {
                sum += v;
                count += 1;
            }
            (None, EmptyClass::Zero) => count += 1,
            (None, EmptyClass::Exclude) => {}
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

#[derive(Clone, Debug)]
enum Compiled {
    Accuracy,
    /// F1 averaged over these label codes (a single class is a subset of one).
    F1 { classes: Vec<u32> },
    Mae,
    Custom(CustomMetric),
}

/// A [`ScoreSpec`] resolved against one table's label set.
#[derive(Clone, Debug)]
pub struct Scorer {
    compiled: Compiled,
    labels: Vec<String>,
    empty_class: EmptyClass,
    direction: Direction,
}

impl Scorer {
    pub fn new(spec: &ScoreSpec, table: &PredictionTable) -> Result<Self> {
        spec.check()?;
        let task = table.task();
        let mismatch = || Error::MetricTaskMismatch {
            metric: spec.metric.to_string(),
            task: task.as_str(),
        };
        let resolve = |label: &String| {
            table
                .label_code(label)
                .ok_or_else(|| Error::UnknownLabel(label.clone()))
        };
        let compiled = match (&spec.metric, task) {
            (Metric::Accuracy, TaskKind::Classification) => Compiled::Accuracy,
            (Metric::F1(c), TaskKind::Classification) => {
                Compiled::F1 { classes: vec![resolve(c)?] }
            }
            (Metric::MacroF1(cs), TaskKind::Classification) => Compiled::F1 {
                classes: cs.iter().map(resolve).collect::<Result<_>>()?,
            },
            (Metric::Mae, TaskKind::Regression) => Compiled::Mae,
            (Metric::Custom(c), _) => Compiled::Custom(c.clone()),
            _ => return Err(mismatch()),
        };
        Ok(Scorer {
            compiled,
            labels: table.label_set().to_vec(),
            empty_class: spec.empty_class,
            direction: spec.direction,
        })
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Score on the full columns.
    pub fn score(&self, gold: &Column, pred: &Column) -> f64 {
        match (&self.compiled, gold, pred) {
            (Compiled::Accuracy, Column::Labels(g), Column::Labels(p)) => {
                let correct = g.iter().zip(p).filter(|(a, b)| a == b).count();
                correct as f64 / g.len() as f64
            }
            (Compiled::F1 { classes }, Column::Labels(g), Column::Labels(p)) => {
                self.f1_from_pairs(classes, g.iter().copied().zip(p.iter().copied()))
            }
            (Compiled::Mae, Column::Values(g), Column::Values(p)) => {
                g.iter().zip(p).map(|(a, b)| libm::fabs(a - b)).sum::<f64>() / g.len() as f64
            }
            (Compiled::Custom(c), g, p) => c.call(self.sample(g), self.sample(p)),
            _ => f64::NAN,
        }
    }

    /// Score on `gold[indices]`, `pred[indices]`. Indices must be in range;
    /// only custom metrics materialise the resampled columns.
    pub fn score_on_indices(&self, gold: &Column, pred: &Column, indices: &[usize]) -> f64 {
        match (&self.compiled, gold, pred) {
            (Compiled::Accuracy, Column::Labels(g), Column::Labels(p)) => {
                let correct = indices.iter().filter(|&&i| g[i] == p[i]).count();
                correct as f64 / indices.len() as f64
            }
            (Compiled::F1 { classes }, Column::Labels(g), Column::Labels(p)) => {
                self.f1_from_pairs(classes, indices.iter().map(|&i| (g[i], p[i])))
            }
            (Compiled::Mae, Column::Values(g), Column::Values(p)) => {
                indices.iter().map(|&i| libm::fabs(g[i] - p[i])).sum::<f64>()
                    / indices.len() as f64
            }
            (Compiled::Custom(c), Column::Labels(g), Column::Labels(p)) => {
                let g: Vec<u32> = indices.iter().map(|&i| g[i]).collect();
                let p: Vec<u32> = indices.iter().map(|&i| p[i]).collect();
                c.call(
                    Sample::Labels { codes: &g, labels: &self.labels },
                    Sample::Labels { codes: &p, labels: &self.labels },
                )
            }
            (Compiled::Custom(c), Column::Values(g), Column::Values(p)) => {
                let g: Vec<f64> = indices.iter().map(|&i| g[i]).collect();
                let p: Vec<f64> = indices.iter().map(|&i| p[i]).collect();
                c.call(Sample::Values(&g), Sample::Values(&p))
            }
            _ => f64::NAN,
        }
    }

    /// Score from a confusion matrix; `None` for metrics that are not
    /// confusion-based (MAE, custom).
    pub fn score_confusion(&self, m: &ConfusionMatrix) -> Option<f64> {
        self.score_cells(m.labels(), |g, p| m.get(g, p) as f64)
    }

    /// Same as [`Scorer::score_confusion`] over real-valued (e.g. expected)
    /// cell masses given as a row-major `k × k` slice.
    pub fn score_cells(&self, k: usize, cell: impl Fn(usize, usize) -> f64) -> Option<f64> {
        match &self.compiled {
            Compiled::Accuracy => {
                let total: f64 = (0..k).flat_map(|g| (0..k).map(move |p| (g, p))).map(|(g, p)| cell(g, p)).sum();
                let correct: f64 = (0..k).map(|c| cell(c, c)).sum();
                Some(correct / total)
            }
            Compiled::F1 { classes } => Some(macro_mean(
                classes.iter().map(|&c| {
                    let c = c as usize;
                    let tp = cell(c, c);
                    let col: f64 = (0..k).map(|g| cell(g, c)).sum();
                    let row: f64 = (0..k).map(|p| cell(c, p)).sum();
                    f1(tp, col - tp, row - tp)
                }),
                self.empty_class,
            )),
            Compiled::Mae | Compiled::Custom(_) => None,
        }
    }

    fn f1_from_pairs(&self, classes: &[u32], pairs: impl Iterator<Item = (u32, u32)>) -> f64 {
        let k = self.labels.len();
        // tp, fp, fn per label code
        let mut counts = vec![[0u32; 3]; k];
        for (g, p) in pairs {
            if g == p {
                counts[g as usize][0] += 1;
            } else {
                counts[p as usize][1] += 1;
                counts[g as usize][2] += 1;
            }
        }
        macro_mean(
            classes.iter().map(|&c| {
                let [tp, fp, fn_] = counts[c as usize];
                f1(tp as f64, fp as f64, fn_ as f64)
            }),
            self.empty_class,
        )
    }

    fn sample<'a>(&'a self, column: &'a Column) -> Sample<'a> {
        match column {
            Column::Labels(codes) => Sample::Labels { codes, labels: &self.labels },
            Column::Values(v) => Sample::Values(v),
        }
    }
}

fn pair_table(gold: &[Outcome], pred: &[Outcome]) -> Result<PredictionTable> {
    if gold.is_empty() {
        return Err(Error::Empty("gold vector"));
    }
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch { expected: gold.len(), found: pred.len() });
    }
    let task = match gold[0] {
        Outcome::Label(_) => TaskKind::Classification,
        Outcome::Value(_) => TaskKind::Regression,
    };
    let raw = RawTable::new(task, gold.to_vec()).with_system("pred", pred.to_vec());
    PredictionTable::from_raw(raw).map_err(Error::InvalidTable)
}

/// Scores `pred` against `gold`. The task kind follows the first gold value.
pub fn score(gold: &[Outcome], pred: &[Outcome], spec: &ScoreSpec) -> Result<f64> {
    let table = pair_table(gold, pred)?;
    let scorer = Scorer::new(spec, &table)?;
    Ok(scorer.score(table.gold(), &table.systems()[0].predictions))
}

/// Scores the resample `gold[indices]` vs `pred[indices]`.
pub fn score_on_indices(
    gold: &[Outcome],
    pred: &[Outcome],
    spec: &ScoreSpec,
    indices: &[usize],
) -> Result<f64> {
    let table = pair_table(gold, pred)?;
    if indices.is_empty() {
        return Err(Error::Empty("resample indices"));
    }
    if let Some(&index) = indices.iter().find(|&&i| i >= gold.len()) {
        return Err(Error::IndexOutOfRange { index, n: gold.len() });
    }
    let scorer = Scorer::new(spec, &table)?;
    Ok(scorer.score_on_indices(table.gold(), &table.systems()[0].predictions, indices))
}
