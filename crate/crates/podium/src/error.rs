use std::fmt;
use std::path::PathBuf;

/// Pipeline step an error came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Analysis,
    Render,
    Write,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Analysis => "analysis",
            Stage::Render => "render",
            Stage::Write => "write",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("file is empty")]
    Empty,
    #[error("no data rows after the header")]
    NoRows,
    #[error("gold column `{0}` not found in header")]
    MissingGold(String),
    #[error("column `{0}` appears more than once in the header")]
    DuplicateColumn(String),
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged { line: u64, expected: usize, found: usize },
    #[error("column `{column}` mixes numbers and labels (e.g. `{number}` and `{label}`); pass --task to choose")]
    MixedColumn { column: String, number: String, label: String },
    #[error("{0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, thiserror::Error)]
pub enum PodiumError {
    #[error("{stage}: {source}")]
    Core {
        stage: Stage,
        #[source]
        source: podium_core::Error,
    },
    #[error("load: {path}: {source}")]
    Load {
        path: PathBuf,
        #[source]
        source: LoadError,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("{stage}: {path}: {source}")]
    Io {
        stage: Stage,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl PodiumError {
    pub fn core(stage: Stage, source: podium_core::Error) -> Self {
        PodiumError::Core { stage, source }
    }

    pub fn io(stage: Stage, path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PodiumError::Io { stage, path: path.into(), source }
    }

    pub fn stage(&self) -> Stage {
        match self {
            PodiumError::Core { stage, .. } | PodiumError::Io { stage, .. } => *stage,
            PodiumError::Load { .. } => Stage::Load,
            PodiumError::Config(_) => Stage::Config,
        }
    }

    /// 1 validation failure, 2 configuration error, 3 I/O error.
    pub fn exit_code(&self) -> u8 {
        use podium_core::Error as E;
        match self {
            PodiumError::Io { .. } => 3,
            PodiumError::Load { source: LoadError::Csv(e), .. } if e.is_io_error() => 3,
            PodiumError::Load { .. } => 1,
            PodiumError::Config(_) => 2,
            PodiumError::Core { source, .. } => match source {
                E::InvalidSpec(_)
                | E::InvalidPlan(_)
                | E::UnknownLabel(_)
                | E::MetricTaskMismatch { .. }
                | E::InvalidSynth(_)
                | E::TooFewReplicates { .. } => 2,
                _ => 1,
            },
        }
    }
}

pub type Result<T, E = PodiumError> = std::result::Result<T, E>;
