//! Prediction tables: gold outcomes plus one prediction vector per system.
//!
//! Tables are built from a [`RawTable`], which may hold anything a file
//! loader produced (missing cells, ragged columns, mixed kinds). Building
//! checks every invariant and either yields a [`PredictionTable`] or the
//! full list of [`Violation`]s. Labels are interned into `u32` codes in
//! first-appearance order: gold first, then each system in column order.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum TaskKind {
    Classification,
    Regression,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Classification => "classification",
            TaskKind::Regression => "regression",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One gold or predicted value.
#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Label(String),
    Value(f64),
}

impl Outcome {
    pub fn label(s: &str) -> Self {
        Outcome::Label(s.to_string())
    }
}

impl From<&str> for Outcome {
    fn from(s: &str) -> Self {
        Outcome::Label(s.to_string())
    }
}

impl From<f64> for Outcome {
    fn from(v: f64) -> Self {
        Outcome::Value(v)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    EmptyGold,
    EmptySystemName { column: usize },
    DuplicateSystem { name: String },
    LengthMismatch { system: String, expected: usize, found: usize },
    Missing { system: Option<String>, row: usize },
    /// A label where a number was expected (regression tables).
    NotNumeric { system: Option<String>, row: usize, value: String },
    /// A number where a label was expected (classification tables).
    NotCategorical { system: Option<String>, row: usize },
    NonFinite { system: Option<String>, row: usize },
    EmptyLabel { system: Option<String>, row: usize },
}

fn column_name(system: &Option<String>) -> &str {
    system.as_deref().unwrap_or("<gold>")
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyGold => write!(f, "gold column has no rows"),
            Violation::EmptySystemName { column } => {
                write!(f, "system column {column} has an empty name")
            }
            Violation::DuplicateSystem { name } => write!(f, "duplicate system `{name}`"),
            Violation::LengthMismatch { system, expected, found } => write!(
                f,
                "system `{system}` has {found} predictions, expected {expected}"
            ),
            Violation::Missing { system, row } => {
                write!(f, "missing value in `{}` at data row {}", column_name(system), row + 1)
            }
            Violation::NotNumeric { system, row, value } => write!(
                f,
                "non-numeric value `{value}` in `{}` at data row {}",
                column_name(system),
                row + 1
            ),
            Violation::NotCategorical { system, row } => write!(
                f,
                "numeric value in categorical column `{}` at data row {}",
                column_name(system),
                row + 1
            ),
            Violation::NonFinite { system, row } => {
                write!(f, "non-finite value in `{}` at data row {}", column_name(system), row + 1)
            }
            Violation::EmptyLabel { system, row } => {
                write!(f, "empty label in `{}` at data row {}", column_name(system), row + 1)
            }
        }
    }
}

/// Unchecked table contents, as produced by a loader or by hand.
#[derive(Clone, Debug)]
pub struct RawTable {
    pub task: TaskKind,
    pub gold: Vec<Option<Outcome>>,
    pub systems: Vec<(String, Vec<Option<Outcome>>)>,
}

impl RawTable {
    pub fn new(task: TaskKind, gold: Vec<Outcome>) -> Self {
        RawTable {
            task,
            gold: gold.into_iter().map(Some).collect(),
            systems: Vec::new(),
        }
    }

    pub fn with_system(mut self, name: &str, preds: Vec<Outcome>) -> Self {
        self.systems
            .push((name.to_string(), preds.into_iter().map(Some).collect()));
        self
    }

    /// Every invariant violation, in column order. Empty means the table can
    /// be built.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.gold.len();
        if n == 0 {
            out.push(Violation::EmptyGold);
        }
        check_column(self.task, None, &self.gold, &mut out);

        let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
        for (column, (name, preds)) in self.systems.iter().enumerate() {
            let trimmed = name.trim();
            if trimmed.is_empty() {
                out.push(Violation::EmptySystemName { column });
            } else if seen.insert(trimmed, ()).is_some() {
                out.push(Violation::DuplicateSystem { name: trimmed.to_string() });
            }
            if preds.len() != n {
                out.push(Violation::LengthMismatch {
                    system: trimmed.to_string(),
                    expected: n,
                    found: preds.len(),
                });
            }
            check_column(self.task, Some(trimmed.to_string()), preds, &mut out);
        }
        out
    }
}

fn check_column(
    task: TaskKind,
    system: Option<String>,
    values: &[Option<Outcome>],
    out: &mut Vec<Violation>,
) {
    for (row, value) in values.iter().enumerate() {
        let system = || system.clone();
        match (task, value) {
            (_, None) => out.push(Violation::Missing { system: system(), row }),
            (TaskKind::Classification, Some(Outcome::Label(l))) if l.trim().is_empty() => {
                out.push(Violation::EmptyLabel { system: system(), row })
            }
            (TaskKind::Classification, Some(Outcome::Label(_))) => {}
            (TaskKind::Classification, Some(Outcome::Value(_))) => {
                out.push(Violation::NotCategorical { system: system(), row })
            }
            (TaskKind::Regression, Some(Outcome::Value(v))) if !v.is_finite() => {
                out.push(Violation::NonFinite { system: system(), row })
            }
            (TaskKind::Regression, Some(Outcome::Value(_))) => {}
            (TaskKind::Regression, Some(Outcome::Label(l))) => out.push(Violation::NotNumeric {
                system: system(),
                row,
                value: l.clone(),
            }),
        }
    }
}

/// A column of outcomes in compact form.
#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    /// Codes into the table's label set.
    Labels(Vec<u32>),
    Values(Vec<f64>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Labels(c) => c.len(),
            Column::Values(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct System {
    pub name: String,
    pub predictions: Column,
}

/// Validated gold outcomes and system predictions, all of length `n >= 1`.
///
/// Immutable once built; share it by reference across workers.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTable {
    task: TaskKind,
    gold: Column,
    systems: Vec<System>,
    labels: Vec<String>,
}

struct Interner {
    labels: Vec<String>,
    index: BTreeMap<String, u32>,
}

impl Interner {
    fn code(&mut self, label: &str) -> u32 {
        let label = label.trim();
        if let Some(&c) = self.index.get(label) {
            return c;
        }
        let c = self.labels.len() as u32;
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), c);
        c
    }
}

impl PredictionTable {
    pub fn from_raw(raw: RawTable) -> core::result::Result<Self, Vec<Violation>> {
        let violations = raw.validate();
        if !violations.is_empty() {
            return Err(violations);
        }
        let mut interner = Interner { labels: Vec::new(), index: BTreeMap::new() };
        let mut convert = |values: Vec<Option<Outcome>>| -> Column {
            match raw.task {
                TaskKind::Classification => Column::Labels(
                    values
                        .into_iter()
                        .map(|v| match v {
                            Some(Outcome::Label(l)) => interner.code(&l),
                            _ => unreachable!("validated"),
                        })
                        .collect(),
                ),
                TaskKind::Regression => Column::Values(
                    values
                        .into_iter()
                        .map(|v| match v {
                            Some(Outcome::Value(x)) => x,
                            _ => unreachable!("validated"),
                        })
                        .collect(),
                ),
            }
        };
        let gold = convert(raw.gold);
        let systems = raw
            .systems
            .into_iter()
            .map(|(name, preds)| System {
                name: name.trim().to_string(),
                predictions: convert(preds),
            })
            .collect();
        Ok(PredictionTable {
            task: raw.task,
            gold,
            systems,
            labels: interner.labels,
        })
    }

    /// Classification table from string labels.
    pub fn classification(gold: &[&str], systems: &[(&str, &[&str])]) -> Result<Self> {
        let mut raw = RawTable::new(
            TaskKind::Classification,
            gold.iter().map(|&l| Outcome::from(l)).collect(),
        );
        for (name, preds) in systems {
            raw = raw.with_system(name, preds.iter().map(|&l| Outcome::from(l)).collect());
        }
        Self::from_raw(raw).map_err(Error::InvalidTable)
    }

    pub fn regression(gold: &[f64], systems: &[(&str, &[f64])]) -> Result<Self> {
        let mut raw = RawTable::new(
            TaskKind::Regression,
            gold.iter().map(|&v| Outcome::Value(v)).collect(),
        );
        for (name, preds) in systems {
            raw = raw.with_system(name, preds.iter().map(|&v| Outcome::Value(v)).collect());
        }
        Self::from_raw(raw).map_err(Error::InvalidTable)
    }

    /// Build from already-coded columns. Label codes must index `labels`.
    pub fn from_columns(
        task: TaskKind,
        labels: Vec<String>,
        gold: Column,
        systems: Vec<System>,
    ) -> Result<Self> {
        let table = PredictionTable { task, gold, systems, labels };
        let violations = table.validate();
        if violations.is_empty() {
            Ok(table)
        } else {
            Err(Error::InvalidTable(violations))
        }
    }

    /// Re-checks the invariants of a built table. Always empty for tables
    /// that came out of a constructor.
    pub fn validate(&self) -> Vec<Violation> {
        self.to_raw().validate()
    }

    /// Expands the compact columns back to outcomes.
    pub fn to_raw(&self) -> RawTable {
        RawTable {
            task: self.task,
            gold: self.outcomes(&self.gold).into_iter().map(Some).collect(),
            systems: self
                .systems
                .iter()
                .map(|s| {
                    (
                        s.name.clone(),
                        self.outcomes(&s.predictions).into_iter().map(Some).collect(),
                    )
                })
                .collect(),
        }
    }

    fn outcomes(&self, column: &Column) -> Vec<Outcome> {
        match column {
            Column::Labels(codes) => codes
                .iter()
                .map(|&c| match self.labels.get(c as usize) {
                    Some(l) => Outcome::Label(l.clone()),
                    // Out-of-range codes surface as an empty label violation.
                    None => Outcome::Label(String::new()),
                })
                .collect(),
            Column::Values(v) => v.iter().map(|&x| Outcome::Value(x)).collect(),
        }
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn n(&self) -> usize {
        self.gold.len()
    }

    pub fn gold(&self) -> &Column {
        &self.gold
    }

    pub fn systems(&self) -> &[System] {
        &self.systems
    }

    pub fn system_names(&self) -> impl Iterator<Item = &str> {
        self.systems.iter().map(|s| s.name.as_str())
    }

    pub fn system(&self, name: &str) -> Option<&System> {
        self.systems.iter().find(|s| s.name == name)
    }

    pub fn system_index(&self, name: &str) -> Result<usize> {
        self.systems
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| Error::UnknownSystem(name.to_string()))
    }

    /// Distinct labels over gold and every prediction column; empty for
    /// regression.
    pub fn label_set(&self) -> &[String] {
        &self.labels
    }

    pub fn label_code(&self, label: &str) -> Option<u32> {
        let label = label.trim();
        self.labels.iter().position(|l| l == label).map(|i| i as u32)
    }

    /// True when the system reproduces gold element-wise.
    pub fn is_perfect(&self, system: usize) -> bool {
        self.systems
            .get(system)
            .is_some_and(|s| s.predictions == self.gold)
    }

    /// A copy keeping only the systems for which `keep` returns true. The
    /// label set is unchanged.
    pub fn retain_systems(&self, mut keep: impl FnMut(usize, &System) -> bool) -> Self {
        PredictionTable {
            task: self.task,
            gold: self.gold.clone(),
            systems: self
                .systems
                .iter()
                .enumerate()
                .filter(|(i, s)| keep(*i, s))
                .map(|(_, s)| s.clone())
                .collect(),
            labels: self.labels.clone(),
        }
    }
}
