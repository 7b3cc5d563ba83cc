//! Synthetic competitions with known ground truth.
//!
//! [`generate`] draws gold outcomes and corrupts them once per system, so the
//! population score of every system has a closed form ([`population_score`]).
//! [`calibrate`] reruns the whole pipeline on fresh draws to measure interval
//! coverage and the null distribution of p-values. [`matched_table`] builds
//! a fixed-size table whose observed scores hit given targets, for checking
//! point estimates and deltas against published score tables.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::bootstrap::{distributions, percentile_interval, BootstrapPlan};
use crate::data::{Column, PredictionTable, System, TaskKind};
use crate::error::{Error, Result};
use crate::exec::map_range;
use crate::inference::{p_value_with, PValueRule, PairedDelta};
use crate::metrics::{ConfusionMatrix, Metric, ScoreSpec, Scorer};
use crate::rng::{derive_seed, StreamRng};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum GoldModel {
    /// Labels drawn independently with the given (unnormalised) weights.
    Categorical { labels: Vec<String>, weights: Vec<f64> },
    Normal { mean: f64, sd: f64 },
}

/// What a corrupted element is replaced by.
#[derive(Clone, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Kernel {
    /// Any label other than the gold one, uniformly.
    #[default]
    UniformWrong,
    /// Row `g` holds replacement weights when gold is label `g`.
    Matrix { rows: Vec<Vec<f64>> },
    /// Regression: gold plus one of `values`, drawn with `weights`.
    Offsets { values: Vec<f64>, weights: Vec<f64> },
    /// Regression: gold plus normal noise.
    Gaussian { sd: f64 },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemModel {
    pub name: String,
    /// Probability that an element is replaced by a kernel draw.
    pub corruption: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub kernel: Kernel,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynthConfig {
    pub n: usize,
    pub gold: GoldModel,
    pub systems: Vec<SystemModel>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
}

impl SynthConfig {
    /// Classification config with a uniform-wrong kernel for every system.
    pub fn classification(n: usize, labels: &[&str], weights: &[f64], systems: &[(&str, f64)], seed: u64) -> Self {
        SynthConfig {
            n,
            gold: GoldModel::Categorical {
                labels: labels.iter().map(|s| String::from(*s)).collect(),
                weights: weights.to_vec(),
            },
            systems: systems
                .iter()
                .map(|&(name, corruption)| SystemModel { name: name.into(), corruption, kernel: Kernel::UniformWrong })
                .collect(),
            seed,
        }
    }

    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSynth(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.systems.is_empty() {
            return bad("no systems".into());
        }
        let k = match &self.gold {
            GoldModel::Categorical { labels, weights } => {
                if labels.len() < 2 || labels.len() != weights.len() {
                    return bad("categorical gold needs at least two labels, one weight each".into());
                }
                if !weights_ok(weights) {
                    return bad("gold weights must be finite, non-negative and not all zero".into());
                }
                Some(labels.len())
            }
            GoldModel::Normal { mean, sd } => {
                if !mean.is_finite() || !sd.is_finite() || *sd < 0.0 {
                    return bad("normal gold needs finite mean and sd >= 0".into());
                }
                None
            }
        };
        for s in &self.systems {
            if !(0.0..=1.0).contains(&s.corruption) {
                return bad(format!("{}: corruption {} outside [0, 1]", s.name, s.corruption));
            }
            let ok = match (&s.kernel, k) {
                (Kernel::UniformWrong, Some(_)) => true,
                (Kernel::Matrix { rows }, Some(k)) => rows.len() == k && rows.iter().all(|r| r.len() == k && weights_ok(r)),
                (Kernel::Offsets { values, weights }, None) => {
                    values.len() == weights.len() && values.iter().all(|v| v.is_finite()) && weights_ok(weights)
                }
                (Kernel::Gaussian { sd }, None) => sd.is_finite() && *sd >= 0.0,
                _ => false,
            };
            if !ok {
                return bad(format!("{}: kernel does not fit the gold model", s.name));
            }
        }
        Ok(())
    }
}

fn weights_ok(w: &[f64]) -> bool {
    w.iter().all(|x| x.is_finite() && *x >= 0.0) && w.iter().sum::<f64>() > 0.0
}

/// Draw one table. Gold uses stream 0 of `config.seed`, system `i` uses
/// stream `i + 1`, so adding a system never changes the others.
pub fn generate(config: &SynthConfig) -> Result<PredictionTable> {
    config.check()?;
    let n = config.n;
    let mut rng = StreamRng::new(config.seed, 0);
    match &config.gold {
        GoldModel::Categorical { labels, weights } => {
            let k = labels.len();
            let gold: Vec<u32> = (0..n).map(|_| rng.weighted(weights) as u32).collect();
            let systems = config
                .systems
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut rng = StreamRng::new(config.seed, i as u64 + 1);
                    let preds = gold
                        .iter()
                        .map(|&g| {
                            if !rng.bernoulli(s.corruption) {
                                return g;
                            }
                            match &s.kernel {
                                Kernel::Matrix { rows } => rng.weighted(&rows[g as usize]) as u32,
                                _ => {
                                    let shift = 1 + rng.below(k as u64 - 1) as u32;
                                    (g + shift) % k as u32
                                }
                            }
                        })
                        .collect();
                    System { name: s.name.clone(), predictions: Column::Labels(preds) }
                })
                .collect();
            PredictionTable::from_columns(TaskKind::Classification, labels.clone(), Column::Labels(gold), systems)
        }
        GoldModel::Normal { mean, sd } => {
            let gold: Vec<f64> = (0..n).map(|_| mean + sd * rng.normal()).collect();
            let systems = config
                .systems
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let mut rng = StreamRng::new(config.seed, i as u64 + 1);
                    let preds = gold
                        .iter()
                        .map(|&g| {
                            if !rng.bernoulli(s.corruption) {
                                return g;
                            }
                            match &s.kernel {
                                Kernel::Offsets { values, weights } => g + values[rng.weighted(weights)],
                                Kernel::Gaussian { sd } => g + sd * rng.normal(),
                                _ => g,
                            }
                        })
                        .collect();
                    System { name: s.name.clone(), predictions: Column::Values(preds) }
                })
                .collect();
            PredictionTable::from_columns(TaskKind::Regression, Vec::new(), Column::Values(gold), systems)
        }
    }
}

/// Score of `system` in the limit of infinite test size.
pub fn population_score(config: &SynthConfig, system: &str, spec: &ScoreSpec) -> Result<f64> {
    config.check()?;
    let model = config
        .systems
        .iter()
        .find(|s| s.name == system)
        .ok_or_else(|| Error::UnknownSystem(system.into()))?;
    let c = model.corruption;
    match (&config.gold, &model.kernel) {
        (GoldModel::Categorical { labels, weights }, kernel) => {
            let scorer = Scorer::new(spec, &label_table(labels)?)?;
            let k = labels.len();
            let total: f64 = weights.iter().sum();
            let replace = |g: usize, p: usize| match kernel {
                Kernel::Matrix { rows } => rows[g][p] / rows[g].iter().sum::<f64>(),
                _ if g == p => 0.0,
                _ => 1.0 / (k - 1) as f64,
            };
            let cell = |g: usize, p: usize| {
                let keep = if g == p { 1.0 - c } else { 0.0 };
                weights[g] / total * (keep + c * replace(g, p))
            };
            scorer.score_cells(k, cell).ok_or(Error::InvalidSynth(format!("no closed form for {}", spec.metric)))
        }
        (GoldModel::Normal { .. }, kernel) if matches!(spec.metric, Metric::Mae) => {
            let mean_abs = match kernel {
                Kernel::Offsets { values, weights } => {
                    let total: f64 = weights.iter().sum();
                    values.iter().zip(weights).map(|(v, w)| libm::fabs(*v) * w).sum::<f64>() / total
                }
                Kernel::Gaussian { sd } => sd * libm::sqrt(2.0 / core::f64::consts::PI),
                _ => 0.0,
            };
            Ok(c * mean_abs)
        }
        _ => Err(Error::InvalidSynth(format!("no closed form for {}", spec.metric))),
    }
}

/// A one-row table carrying only a label set, for resolving scorers.
fn label_table(labels: &[String]) -> Result<PredictionTable> {
    PredictionTable::from_columns(
        TaskKind::Classification,
        labels.to_vec(),
        Column::Labels(vec![0]),
        vec![System { name: "_".into(), predictions: Column::Labels(vec![0]) }],
    )
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CalibrationSummary {
    pub trials: usize,
    /// Share of all per-system intervals (over every trial) that contain the
    /// population score.
    pub coverage: f64,
    pub coverage_by_system: BTreeMap<String, f64>,
    /// Null p-values of the first system against the second, one per trial,
    /// with the pair in configuration order (no reorientation).
    pub p_values: Vec<f64>,
    /// Kolmogorov-Smirnov distance of `p_values` from U[0, 1].
    pub ks_distance: f64,
    /// Counts over ten equal bins of [0, 1]; the last bin is closed.
    pub histogram: Vec<usize>,
}

/// Run the full bootstrap on `trials` fresh tables. Trial `t` draws data
/// with `derive_seed(config.seed, t)` and resamples with
/// `derive_seed(plan.seed, t)`; trials run in parallel, each sequentially.
pub fn calibrate(config: &SynthConfig, spec: &ScoreSpec, plan: &BootstrapPlan, trials: usize) -> Result<CalibrationSummary> {
    if trials == 0 {
        return Err(Error::InvalidSynth("trials must be at least 1".into()));
    }
    plan.check()?;
    config.check()?;
    let truth: Vec<f64> = config
        .systems
        .iter()
        .map(|s| population_score(config, &s.name, spec))
        .collect::<Result<_>>()?;
    let m = config.systems.len();

    let runs = map_range(trials, plan.workers, || (), |_, t| -> Result<(Vec<bool>, Option<f64>)> {
        let cfg = SynthConfig { seed: derive_seed(config.seed, t as u64), ..config.clone() };
        let trial_plan = BootstrapPlan { seed: derive_seed(plan.seed, t as u64), workers: Some(1), ..plan.clone() };
        let table = generate(&cfg)?;
        let dists = distributions(&table, spec, &trial_plan)?;
        let covered = dists
            .iter()
            .zip(&truth)
            .map(|(d, &t)| Ok(percentile_interval(&d.values, plan.confidence)?.contains(t)))
            .collect::<Result<Vec<_>>>()?;
        let p = (m >= 2).then(|| {
            let pd = PairedDelta::from_distributions(&cfg.systems[0].name, &cfg.systems[1].name, &dists[0], &dists[1], spec.direction);
            p_value_with(&pd, PValueRule::Strict)
        });
        Ok((covered, p))
    });

    let mut hits = vec![0usize; m];
    let mut p_values = Vec::new();
    for run in runs {
        let (covered, p) = run?;
        for (h, c) in hits.iter_mut().zip(covered) {
            *h += c as usize;
        }
        p_values.extend(p);
    }
    let coverage = hits.iter().sum::<usize>() as f64 / (trials * m) as f64;
    let coverage_by_system = config
        .systems
        .iter()
        .zip(&hits)
        .map(|(s, &h)| (s.name.clone(), h as f64 / trials as f64))
        .collect();
    let mut histogram = vec![0usize; 10];
    for &p in &p_values {
        histogram[((p * 10.0) as usize).min(9)] += 1;
    }
    Ok(CalibrationSummary {
        trials,
        coverage,
        coverage_by_system,
        ks_distance: ks_uniform(&p_values),
        p_values,
        histogram,
    })
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `xs` and U[0, 1].
pub fn ks_uniform(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            f64::max((i + 1) as f64 / n - x, x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchedSystem {
    pub name: String,
    pub target: f64,
    /// Index of an earlier system to start from instead of gold.
    #[cfg_attr(feature = "serde", serde(default))]
    pub anchor: Option<usize>,
    /// With an anchor: rows on which this system departs from it.
    #[cfg_attr(feature = "serde", serde(default))]
    pub disagreements: usize,
}

/// A classification table of fixed gold composition whose systems score
/// exactly (within `tolerance`) their targets.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatchedConfig {
    pub labels: Vec<String>,
    pub gold_counts: Vec<usize>,
    pub systems: Vec<MatchedSystem>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default = "default_tolerance"))]
    pub tolerance: f64,
}

fn default_tolerance() -> f64 {
    1e-5
}

const SEARCH_LIMIT: usize = 2_000_000;

impl MatchedConfig {
    /// 312 items, 85 FAVOR / 135 NONE / 92 AGAINST, scored by macro-F1 over
    /// FAVOR and AGAINST.
    pub fn vaxxstance_basque(seed: u64) -> Self {
        Self::vaxxstance(
            [85, 135, 92],
            &[("WordUp.01", 0.5734), ("WordUp.02", 0.5465), ("MultiAztertest.01", 0.5024), ("SQYQP.01", 0.4256), ("MultiAztertest.02", 0.3428)],
            seed,
        )
    }

    /// 694 items, 359 FAVOR / 195 NONE / 140 AGAINST.
    pub fn vaxxstance_spanish(seed: u64) -> Self {
        Self::vaxxstance(
            [359, 195, 140],
            &[("WordUp.02", 0.8092), ("WordUp.01", 0.7906), ("MultiAztertest.01", 0.7410), ("SQYQP.01", 0.6738), ("MultiAztertest.02", 0.6404)],
            seed,
        )
    }

    fn vaxxstance(counts: [usize; 3], systems: &[(&str, f64)], seed: u64) -> Self {
        MatchedConfig {
            labels: vec!["FAVOR".into(), "NONE".into(), "AGAINST".into()],
            gold_counts: counts.to_vec(),
            systems: systems
                .iter()
                .enumerate()
                .map(|(i, &(name, target))| MatchedSystem {
                    name: name.into(),
                    target,
                    // Two runs of one model agree on most items, which keeps
                    // their paired difference tight.
                    anchor: (i == 1).then_some(0),
                    disagreements: if i == 1 { 76 } else { 0 },
                })
                .collect(),
            seed,
            tolerance: default_tolerance(),
        }
    }

    pub fn spec(&self) -> ScoreSpec {
        ScoreSpec::macro_f1(&["FAVOR", "AGAINST"])
    }
}

/// Build the table. Each system starts from gold (or its anchor), then a
/// deterministic stratified pass fixes and breaks rows to land near the
/// target, then a breadth-first search over confusion matrices finds the
/// fewest single-row relabellings that land within tolerance.
pub fn matched_table(config: &MatchedConfig, spec: &ScoreSpec) -> Result<PredictionTable> {
    let k = config.labels.len();
    if k < 2 || config.gold_counts.len() != k || config.gold_counts.iter().sum::<usize>() == 0 {
        return Err(Error::InvalidSynth("need one gold count per label, at least two labels".into()));
    }
    let scorer = Scorer::new(spec, &label_table(&config.labels)?)?;
    if scorer.score_cells(k, |_, _| 1.0).is_none() {
        return Err(Error::InvalidSynth(format!("{} is not confusion-based", spec.metric)));
    }
    let mut rng = StreamRng::new(config.seed, 0);
    let mut gold: Vec<u32> = config
        .gold_counts
        .iter()
        .enumerate()
        .flat_map(|(g, &c)| core::iter::repeat_n(g as u32, c))
        .collect();
    rng.shuffle(&mut gold);
    let n = gold.len();

    let mut preds: Vec<Vec<u32>> = Vec::with_capacity(config.systems.len());
    for (s, sys) in config.systems.iter().enumerate() {
        let mut rng = StreamRng::new(config.seed, s as u64 + 1);
        let base = match sys.anchor {
            None => gold.clone(),
            Some(a) if a < s => preds[a].clone(),
            Some(_) => return Err(Error::InvalidSynth(format!("{}: anchor must be an earlier system", sys.name))),
        };
        let mut order: Vec<usize> = (0..n).collect();
        rng.shuffle(&mut order);
        let right = base.iter().zip(&gold).filter(|(p, g)| p == g).count();
        let wrong = n - right;
        let candidates: Vec<(usize, usize)> = match sys.anchor {
            None => (0..=n).map(|b| (0, b)).collect(),
            Some(_) => (0..=sys.disagreements).map(|f| (f, sys.disagreements - f)).collect(),
        };
        let score_of = |p: &[u32]| scorer.score_confusion(&ConfusionMatrix::from_codes(k, &gold, p)).unwrap_or(f64::NAN);
        let mut best: Option<(f64, Vec<u32>)> = None;
        for (fixes, breaks) in candidates {
            if fixes > wrong || breaks > right {
                continue;
            }
            let p = relabel(&gold, &base, fixes, breaks, &order, k);
            let gap = libm::fabs(score_of(&p) - sys.target);
            if best.as_ref().is_none_or(|(b, _)| gap < *b) {
                best = Some((gap, p));
            }
        }
        let (_, mut p) = best.ok_or_else(|| Error::InvalidSynth(format!("{}: no feasible start", sys.name)))?;
        let path = nearest_matrix(&scorer, ConfusionMatrix::from_codes(k, &gold, &p), sys.target, config.tolerance)
            .ok_or_else(|| Error::CalibrationFailed { system: sys.name.clone(), target: sys.target })?;
        for (g, a, b) in path {
            let rows: Vec<usize> = (0..n).filter(|&i| gold[i] as usize == g && p[i] as usize == a).collect();
            let i = rows[rng.below(rows.len() as u64) as usize];
            p[i] = b as u32;
        }
        preds.push(p);
    }

    let systems = config
        .systems
        .iter()
        .zip(preds)
        .map(|(s, p)| System { name: s.name.clone(), predictions: Column::Labels(p) })
        .collect();
    PredictionTable::from_columns(TaskKind::Classification, config.labels.clone(), Column::Labels(gold), systems)
}

/// Fix `fixes` wrong rows and break `breaks` right rows of `base`, spread
/// over confusion cells in proportion to their size (largest remainder),
/// visiting rows in `order`.
fn relabel(gold: &[u32], base: &[u32], fixes: usize, breaks: usize, order: &[usize], k: usize) -> Vec<u32> {
    let mut p = base.to_vec();
    let mut wrong_cells = Vec::new();
    for g in 0..k as u32 {
        for a in (0..k as u32).filter(|&a| a != g) {
            wrong_cells.push(order.iter().copied().filter(|&i| gold[i] == g && base[i] == a).collect::<Vec<_>>());
        }
    }
    let right_cells: Vec<Vec<usize>> = (0..k as u32)
        .map(|g| order.iter().copied().filter(|&i| gold[i] == g && base[i] == g).collect())
        .collect();
    for i in pick(&wrong_cells, fixes) {
        p[i] = gold[i];
    }
    for (j, i) in pick(&right_cells, breaks).into_iter().enumerate() {
        p[i] = (gold[i] + 1 + (j % (k - 1)) as u32) % k as u32;
    }
    p
}

fn pick(cells: &[Vec<usize>], count: usize) -> Vec<usize> {
    let total: usize = cells.iter().map(Vec::len).sum();
    if total == 0 || count == 0 {
        return Vec::new();
    }
    let quota: Vec<f64> = cells.iter().map(|c| (c.len() * count) as f64 / total as f64).collect();
    let mut take: Vec<usize> = quota.iter().map(|q| libm::floor(*q) as usize).collect();
    let short = count - take.iter().sum::<usize>();
    let mut by_remainder: Vec<usize> = (0..cells.len()).collect();
    by_remainder.sort_by(|&a, &b| (quota[b] - take[b] as f64).total_cmp(&(quota[a] - take[a] as f64)));
    for &c in by_remainder.iter().take(short) {
        take[c] += 1;
    }
    cells.iter().zip(take).flat_map(|(c, t)| c.iter().copied().take(t)).collect()
}

/// Shortest sequence of single-row moves `(gold, from, to)` that brings the
/// score within `tol` of `target`.
fn nearest_matrix(scorer: &Scorer, start: ConfusionMatrix, target: f64, tol: f64) -> Option<Vec<(usize, usize, usize)>> {
    let k = start.labels();
    let mut states = vec![(start.clone(), usize::MAX, (0, 0, 0))];
    let mut seen = BTreeMap::new();
    seen.insert(start, 0usize);
    let mut head = 0;
    while head < states.len() {
        let (m, _, _) = &states[head];
        if libm::fabs(scorer.score_confusion(m)? - target) <= tol {
            let mut path = Vec::new();
            let mut at = head;
            while states[at].1 != usize::MAX {
                path.push(states[at].2);
                at = states[at].1;
            }
            path.reverse();
            return Some(path);
        }
        if states.len() > SEARCH_LIMIT {
            return None;
        }
        let m = m.clone();
        for g in 0..k {
            for a in 0..k {
                if m.get(g, a) == 0 {
                    continue;
                }
                for b in (0..k).filter(|&b| b != a) {
                    let mut next = m.clone();
                    next.add(g, a, -1);
                    next.add(g, b, 1);
                    if !seen.contains_key(&next) {
                        seen.insert(next.clone(), states.len());
                        states.push((next, head, (g, a, b)));
                    }
                }
            }
        }
        head += 1;
    }
    None
}
