//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use podium_core::synth::{calibrate, generate, matched_table, MatchedConfig, SynthConfig};
use podium_core::BootstrapPlan;

use crate::config::{parse_direction, parse_metric, RunConfig};
use crate::csvio::write_table;
use crate::error::{PodiumError, Result, Stage};
use crate::pipeline::run_pipeline;

#[derive(Debug, Parser)]
#[command(name = "podium", version, about = "Bootstrap confidence intervals, paired tests and competitiveness summaries for shared-task results")]
#[command(args_conflicts_with_subcommands = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Analyse a prediction table (the default).
    Run(RunArgs),
    /// Write a synthetic prediction table as CSV.
    Synth(SynthArgs),
    /// Measure interval coverage and null p-value calibration on synthetic data.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Default, Args)]
pub struct RunArgs {
    /// TOML file with any of the options below; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Gold column name [default: y]
    #[arg(long)]
    pub gold_col: Option<String>,
    /// accuracy | f1:<class> | macro-f1:<c1,c2,...> | mae | custom:<path>
    #[arg(long)]
    pub metric: Option<String>,
    /// higher-better | lower-better
    #[arg(long)]
    pub direction: Option<String>,
    /// Bootstrap replicates [default: 10000]
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// [default: 0.05]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// [default: 0.95]
    #[arg(long)]
    pub confidence: Option<f64>,
    /// Comma-separated: none, bonferroni, holm, bh
    #[arg(long, value_delimiter = ',')]
    pub corrections: Option<Vec<String>>,
    /// vs-winner | per-reference | global [default: per-reference]
    #[arg(long)]
    pub family: Option<String>,
    /// System name treated as a copy of gold; empty disables [default: Gold_Standard]
    #[arg(long)]
    pub gold_alias: Option<String>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Comma-separated: json, md, csv, svg [default: all]
    #[arg(long, value_delimiter = ',')]
    pub formats: Option<Vec<String>>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
    /// classification | regression [default: implied by --metric, else inferred from the columns]
    #[arg(long)]
    pub task: Option<String>,
    /// Histogram bins [default: square root of the replicate count]
    #[arg(long)]
    pub bins: Option<usize>,
}

impl RunArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_toml_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($f:ident),*) => { $(if let Some(v) = self.$f { c.$f = v; })* };
        }
        set!(input, gold_col, samples, seed, alpha, confidence, corrections, family, gold_alias, out_dir, formats);
        macro_rules! set_opt {
            ($($f:ident),*) => { $(if self.$f.is_some() { c.$f = self.$f; })* };
        }
        set_opt!(metric, direction, workers, task, bins);
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    VaxxstanceBasque,
    VaxxstanceSpanish,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML generator config (n, gold, systems, seed).
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in table whose systems match published scores exactly.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "y")]
    pub gold_col: String,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// TOML generator config; the first two systems form the null pair.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "accuracy")]
    pub metric: String,
    #[arg(long)]
    pub direction: Option<String>,
    #[arg(long, default_value_t = 2_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output JSON; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn read_synth_config(path: &Path) -> Result<SynthConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| PodiumError::io(Stage::Config, path, e))?;
    toml::from_str(&text).map_err(|e| PodiumError::Config(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| PodiumError::io(Stage::Write, p, e)),
        None => std::io::stdout().write_all(bytes).map_err(|e| PodiumError::io(Stage::Write, "<stdout>", e)),
    }
}

fn synth(args: SynthArgs) -> Result<()> {
    let core = |e| PodiumError::core(Stage::Analysis, e);
    let table = match (args.preset, &args.config) {
        (Some(p), _) => {
            let seed = args.seed.unwrap_or(0);
            let cfg = match p {
                Preset::VaxxstanceBasque => MatchedConfig::vaxxstance_basque(seed),
                Preset::VaxxstanceSpanish => MatchedConfig::vaxxstance_spanish(seed),
            };
            matched_table(&cfg, &cfg.spec()).map_err(core)?
        }
        (None, Some(path)) => {
            let mut cfg = read_synth_config(path)?;
            if let Some(s) = args.seed {
                cfg.seed = s;
            }
            generate(&cfg).map_err(|e| PodiumError::core(Stage::Config, e))?
        }
        (None, None) => return Err(PodiumError::Config("synth needs --config or --preset".into())),
    };
    let mut buf = Vec::new();
    write_table(&mut buf, &table, &args.gold_col).map_err(|e| PodiumError::io(Stage::Write, "<csv>", e.into()))?;
    emit(args.out.as_deref(), &buf)
}

fn calibrate_cmd(args: CalibrateArgs) -> Result<()> {
    let cfg = read_synth_config(&args.config)?;
    let direction = args.direction.as_deref().map(parse_direction).transpose()?;
    let spec = parse_metric(&args.metric, direction)?;
    let plan = BootstrapPlan {
        replicates: args.samples,
        confidence: args.confidence,
        seed: args.seed,
        workers: args.workers,
        ..BootstrapPlan::default()
    };
    let summary = calibrate(&cfg, &spec, &plan, args.trials).map_err(|e| PodiumError::core(Stage::Analysis, e))?;
    let mut bytes = serde_json::to_vec_pretty(&summary).map_err(|e| PodiumError::io(Stage::Render, "<json>", e.into()))?;
    bytes.push(b'\n');
    emit(args.out.as_deref(), &bytes)
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Some(Command::Synth(a)) => synth(a),
        Some(Command::Calibrate(a)) => calibrate_cmd(a),
        Some(Command::Run(a)) => run(a),
        None => run(cli.run),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let out = run_pipeline(&cfg)?;
    let r = &out.analysis.report;
    eprintln!("winner: {} ({} systems, n = {})", r.winner, r.m, r.n);
    for note in &r.notes {
        eprintln!("note: {note}");
    }
    eprintln!("wrote {} files to {}", out.files.len(), cfg.out_dir.display());
    Ok(())
}

/// Parse `args`, run, and map failures to exit codes.
pub fn main_with<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
