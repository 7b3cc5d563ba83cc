//! File formats, reports, plots and the `podium` command line around
//! [`podium_core`].
//!
//! The input is a CSV with one gold column (default `y`) and one column per
//! system. [`pipeline::run_pipeline`] scores every system, bootstraps
//! intervals and paired differences, adjusts p-values and writes tables
//! (CSV, Markdown), full-precision JSON, SVG figures and a manifest.

pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod pipeline;
pub mod plot;
pub mod tables;

pub use config::RunConfig;
pub use error::{PodiumError, Stage};
pub use pipeline::run_pipeline;
