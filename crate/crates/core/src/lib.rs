//! Bootstrap inference for competitions scored on a single held-out test set.
//!
//! Builds as `no_std` + `alloc` with default features disabled.
//! The pipeline is:
//!
//! 1. [`data::PredictionTable`] holds the gold outcomes and every system's
//!    predictions.
//! 2. [`bootstrap`] draws shared resample indices per replicate and scores
//!    every system on them.
//! 3. [`inference`] turns pairs of sampling distributions into paired
//!    differences, percentile intervals and p-values (the `2δ` rule).
//! 4. [`corrections`] adjusts p-value families (Bonferroni, Holm, BH).
//! 5. [`report`] summarises the competition (ties, CV, PPI, `|win-med|`).
//!
//! [`analysis::Analysis`] runs all of the above in one pass; [`synth`]
//! generates competitions with known population scores for calibration.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod analysis;
pub mod bootstrap;
pub mod corrections;
pub mod data;
mod error;
mod exec;
pub mod inference;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod synth;

pub use analysis::{Analysis, AnalysisOptions};
pub use bootstrap::{BootstrapPlan, Interval, SamplingDistribution};
pub use corrections::{Correction, FamilyPolicy};
pub use data::{Outcome, PredictionTable, TaskKind, Violation};
pub use error::{Error, Result};
pub use metrics::{Direction, Metric, ScoreSpec};
