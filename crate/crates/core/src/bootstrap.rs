//! Bootstrap resampling and percentile intervals.
//!
//! Replicate `r` resamples `n` row indices uniformly with replacement from
//! the stream `(seed, r)`. The same index vector is applied to gold and to
//! every system, which is what makes per-replicate score differences
//! paired.

use alloc::vec;
use alloc::vec::Vec;

use crate::data::PredictionTable;
use crate::error::{Error, Result};
use crate::exec::map_range;
use crate::metrics::{ScoreSpec, Scorer};
use crate::rng::StreamRng;

/// Quantile rule used by every interval, recorded in manifests.
pub const QUANTILE_RULE: &str = "linear interpolation, h = (B-1)q on sorted values";

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BootstrapPlan {
    pub replicates: usize,
    pub confidence: f64,
    pub seed: u64,
    /// Significance level for tie decisions.
    pub alpha: f64,
    /// Worker threads; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
}

impl Default for BootstrapPlan {
    fn default() -> Self {
        BootstrapPlan {
            replicates: 10_000,
            confidence: 0.95,
            seed: 0,
            alpha: 0.05,
            workers: None,
        }
    }
}

impl BootstrapPlan {
    pub fn new(replicates: usize, seed: u64) -> Self {
        BootstrapPlan { replicates, seed, ..Default::default() }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn check(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidPlan("replicates must be at least 1"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidPlan("confidence must lie strictly between 0 and 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidPlan("alpha must lie strictly between 0 and 1"));
        }
        Ok(())
    }

    pub fn resample_plan(&self, n: usize) -> ResamplePlan {
        ResamplePlan { n, replicates: self.replicates, seed: self.seed }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResamplePlan {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
}

#[inline]
fn fill_indices(seed: u64, replicate: usize, out: &mut [usize]) {
    let mut rng = StreamRng::new(seed, replicate as u64);
    let n = out.len() as u64;
    for slot in out.iter_mut() {
        *slot = rng.below(n) as usize;
    }
}

/// Row indices of replicate `replicate`; a pure function of
/// `(plan.seed, replicate, plan.n)`.
pub fn resample_indices(plan: &ResamplePlan, replicate: usize) -> Result<Vec<usize>> {
    if plan.n == 0 {
        return Err(Error::Empty("resample size"));
    }
    if replicate >= plan.replicates {
        return Err(Error::ReplicateOutOfRange { replicate, replicates: plan.replicates });
    }
    let mut out = vec![0; plan.n];
    fill_indices(plan.seed, replicate, &mut out);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingDistribution {
    /// One statistic per replicate, in replicate order.
    pub values: Vec<f64>,
    /// The statistic on the original sample.
    pub observed: f64,
}

impl SamplingDistribution {
    pub fn mean(&self) -> f64 {
        mean(&self.values)
    }
}

pub(crate) fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sampling distribution of one system's score.
pub fn distribution(
    table: &PredictionTable,
    system: &str,
    spec: &ScoreSpec,
    plan: &BootstrapPlan,
) -> Result<SamplingDistribution> {
    let index = table.system_index(system)?;
    let only = table.retain_systems(|i, _| i == index);
    Ok(distributions(&only, spec, plan)?.remove(0))
}

/// Sampling distributions of every system in table order, all evaluated on
/// the same resample indices per replicate.
pub fn distributions(
    table: &PredictionTable,
    spec: &ScoreSpec,
    plan: &BootstrapPlan,
) -> Result<Vec<SamplingDistribution>> {
    plan.check()?;
    let scorer = Scorer::new(spec, table)?;
    let seed = plan.seed;
    distributions_with(table, &scorer, plan, |r, buf| fill_indices(seed, r, buf))
}

pub(crate) fn distributions_with(
    table: &PredictionTable,
    scorer: &Scorer,
    plan: &BootstrapPlan,
    indices: impl Fn(usize, &mut [usize]) + Send + Sync,
) -> Result<Vec<SamplingDistribution>> {
    plan.check()?;
    let n = table.n();
    let systems = table.systems();
    let gold = table.gold();
    let rows = map_range(
        plan.replicates,
        plan.workers,
        || vec![0usize; n],
        |buf, r| {
            indices(r, buf);
            systems
                .iter()
                .map(|s| scorer.score_on_indices(gold, &s.predictions, buf))
                .collect::<Vec<f64>>()
        },
    );
    Ok(systems
        .iter()
        .enumerate()
        .map(|(j, s)| SamplingDistribution {
            values: rows.iter().map(|row| row[j]).collect(),
            observed: scorer.score(gold, &s.predictions),
        })
        .collect())
}

/// Lower bound, mean and upper bound of a percentile interval.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lower: f64,
    pub mean: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Linear-interpolation quantile of ascending `sorted` values:
/// `h = (len-1)·q`, `x[⌊h⌋] + (h-⌊h⌋)·(x[⌊h⌋+1] - x[⌊h⌋])`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = libm::floor(h) as usize;
    let frac = h - lo as f64;
    match sorted.get(lo + 1) {
        Some(&next) if frac > 0.0 => sorted[lo] + frac * (next - sorted[lo]),
        _ => sorted[lo],
    }
}

/// Percentile interval: the `(1-c)/2` and `1-(1-c)/2` empirical quantiles
/// and the arithmetic mean of `values`.
pub fn percentile_interval(values: &[f64], confidence: f64) -> Result<Interval> {
    if values.len() < 2 {
        return Err(Error::TooFewReplicates { needed: 2, found: values.len() });
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidPlan("confidence must lie strictly between 0 and 1"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    Ok(Interval {
        lower: quantile_sorted(&sorted, tail),
        mean: mean(values),
        upper: quantile_sorted(&sorted, 1.0 - tail),
    })
}

pub fn percentile_ci(dist: &SamplingDistribution, confidence: f64) -> Result<Interval> {
    percentile_interval(&dist.values, confidence)
}
