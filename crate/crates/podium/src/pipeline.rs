//! Load, analyse, render, write.

use std::collections::BTreeMap;
use std::path::PathBuf;

use podium_core::analysis::{Analysis, AnalysisOptions, DifferenceSummary, PerformanceSummary};
use podium_core::inference::{DifferenceMatrix, PValueRule};
use podium_core::report::CompetitionReport;
use podium_core::{Correction, FamilyPolicy, PredictionTable, ScoreSpec};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::csvio::load_table;
use crate::error::{PodiumError, Result, Stage};
use crate::plot::{delta_histogram, difference_plot, forest_plot};
use crate::tables::build_tables;

pub const MANIFEST: &str = "manifest.json";

#[derive(Serialize)]
struct AnalysisJson<'a> {
    performance: &'a [PerformanceSummary],
    differences: &'a [DifferenceSummary],
    matrix: &'a DifferenceMatrix,
    report: &'a CompetitionReport,
}

/// Everything needed to reproduce the outputs from the input file.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub input: String,
    pub gold_col: String,
    pub task: String,
    pub metric: String,
    pub direction: String,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub confidence: f64,
    pub quantile_rule: &'static str,
    pub rng_family: &'static str,
    pub corrections: Vec<Correction>,
    pub family: FamilyPolicy,
    pub gold_alias: Option<String>,
    pub excluded: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Debug)]
pub struct RunOutput {
    pub analysis: Analysis,
    /// Written paths, sorted.
    pub files: Vec<PathBuf>,
}

/// Resolved settings shared by rendering and the manifest.
pub struct Settings {
    pub spec: ScoreSpec,
    pub options: AnalysisOptions,
    pub formats: Vec<Format>,
    pub bins: Option<usize>,
}

pub fn settings(cfg: &RunConfig, table: &PredictionTable) -> Result<Settings> {
    Ok(Settings {
        spec: cfg.score_spec(table.task())?,
        options: AnalysisOptions {
            policy: cfg.family()?,
            corrections: cfg.corrections()?,
            gold_alias: cfg.gold_alias(),
            p_rule: PValueRule::Strict,
            keep_samples: false,
        },
        formats: cfg.formats()?.into_iter().collect(),
        bins: cfg.bins,
    })
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| PodiumError::io(Stage::Render, "<json>", e.into()))?;
    out.push(b'\n');
    Ok(out)
}

/// Render every requested artifact, keyed by file name. The manifest is
/// always included.
pub fn render(cfg: &RunConfig, table: &PredictionTable, s: &Settings, a: &Analysis) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut files = BTreeMap::new();
    let tables = build_tables(a, &s.options.corrections);
    for format in &s.formats {
        match format {
            Format::Json => {
                let doc = AnalysisJson {
                    performance: &a.performance,
                    differences: &a.pairs,
                    matrix: &a.matrix,
                    report: &a.report,
                };
                files.insert("analysis.json".into(), json(&doc)?);
            }
            Format::Csv => {
                for t in &tables {
                    files.insert(format!("{}.csv", t.name), t.to_csv().into_bytes());
                }
            }
            Format::Md => {
                let md: Vec<String> = tables.iter().map(|t| t.to_markdown()).collect();
                files.insert("tables.md".into(), md.join("\n").into_bytes());
            }
            Format::Svg => {
                let forest = forest_plot(&a.performance);
                files.insert("forest.svg".into(), forest.svg.into_bytes());
                files.insert("forest.json".into(), json(&forest.data)?);
                let diff = difference_plot(a.vs_winner());
                files.insert("differences.svg".into(), diff.svg.into_bytes());
                files.insert("differences.json".into(), json(&diff.data)?);
                for (i, pd) in a.winner_deltas.iter().enumerate() {
                    let h = delta_histogram(pd, s.bins);
                    // Ranks rather than names keep file names portable.
                    let stem = format!("delta_hist_{:02}", i + 1);
                    files.insert(format!("{stem}.svg"), h.svg.into_bytes());
                    files.insert(format!("{stem}.json"), json(&h.data)?);
                }
            }
        }
    }
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        input: cfg.input.display().to_string(),
        gold_col: cfg.gold_col.clone(),
        task: table.task().to_string(),
        metric: s.spec.metric.to_string(),
        direction: s.spec.direction.as_str().into(),
        replicates: a.report.replicates,
        seed: a.report.seed,
        alpha: a.report.alpha,
        confidence: a.report.confidence,
        quantile_rule: a.report.quantile_rule,
        rng_family: a.report.rng_family,
        corrections: s.options.corrections.clone(),
        family: s.options.policy,
        gold_alias: s.options.gold_alias.clone(),
        excluded: a.report.excluded.clone(),
        files: files.keys().cloned().collect(),
    };
    files.insert(MANIFEST.into(), json(&manifest)?);
    Ok(files)
}

pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutput> {
    let plan = cfg.plan()?;
    if cfg.input.as_os_str().is_empty() {
        return Err(PodiumError::Config("no input file".into()));
    }
    let table = load_table(&cfg.input, &cfg.gold_col, cfg.load_task()?)?;
    let s = settings(cfg, &table)?;
    let analysis =
        Analysis::run(&table, &s.spec, &plan, &s.options).map_err(|e| PodiumError::core(Stage::Analysis, e))?;
    let rendered = render(cfg, &table, &s, &analysis)?;

    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| PodiumError::io(Stage::Write, &cfg.out_dir, e))?;
    let mut files = Vec::with_capacity(rendered.len());
    for (name, bytes) in rendered {
        let path = cfg.out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| PodiumError::io(Stage::Write, &path, e))?;
        files.push(path);
    }
    Ok(RunOutput { analysis, files })
}
