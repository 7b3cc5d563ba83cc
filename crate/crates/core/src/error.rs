use alloc::string::String;
use alloc::vec::Vec;

use crate::data::Violation;

fn summarize(v: &[Violation]) -> String {
    match v {
        [] => String::from("no details"),
        [one] => alloc::format!("{one}"),
        [first, rest @ ..] => alloc::format!("{first} (and {} more)", rest.len()),
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid prediction table: {}", summarize(.0))]
    InvalidTable(Vec<Violation>),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("unknown system `{0}`")]
    UnknownSystem(String),
    #[error("label `{0}` is not in the table's label set")]
    UnknownLabel(String),
    #[error("metric `{metric}` cannot be used on {task} data")]
    MetricTaskMismatch { metric: String, task: &'static str },
    #[error("invalid score spec: {0}")]
    InvalidSpec(&'static str),
    #[error("invalid bootstrap plan: {0}")]
    InvalidPlan(&'static str),
    #[error("index {index} out of range for sample size {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("replicate {replicate} out of range for {replicates} replicates")]
    ReplicateOutOfRange { replicate: usize, replicates: usize },
    #[error("need at least {needed} replicates, have {found}")]
    TooFewReplicates { needed: usize, found: usize },
    #[error("need at least {needed} systems, have {found}")]
    TooFewSystems { needed: usize, found: usize },
    #[error("p-value {0} is outside [0, 1]")]
    InvalidPValue(f64),
    #[error("duplicate pair in p-value family")]
    DuplicatePair,
    #[error("coefficient of variation undefined for zero mean")]
    ZeroMean,
    #[error("invalid synthetic config: {0}")]
    InvalidSynth(String),
    #[error("could not match target score {target} for system `{system}`")]
    CalibrationFailed { system: String, target: f64 },
}
