//! Competition-level summary: how many comparisons with the winner (and
//! overall) are statistical ties, how spread out the field is, and how much
//! headroom the winner leaves.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::analysis::{Analysis, AnalysisOptions};
use crate::bootstrap::BootstrapPlan;
use crate::corrections::{Correction, FamilyPolicy, PairId};
use crate::data::PredictionTable;
use crate::error::{Error, Result};
use crate::metrics::{Direction, ScoreSpec};

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CompetitionReport {
    /// Test-set size.
    pub n: usize,
    /// Competitors after exclusions.
    pub m: usize,
    pub possible_comparisons: usize,
    pub ties_with_winner: BTreeMap<Correction, usize>,
    pub ties_all_pairs: BTreeMap<Correction, usize>,
    pub win_med_gap: f64,
    /// Coefficient of variation in percent; `None` when the mean score is 0.
    pub cv: Option<f64>,
    /// False for unbounded lower-is-better metrics such as MAE, whose CV
    /// cannot be compared with other competitions.
    pub cv_comparable: bool,
    pub ppi: Option<f64>,
    pub alpha: f64,
    pub winner: String,
    /// Competitors best-first.
    pub ranking: Vec<String>,
    pub excluded: Vec<String>,
    pub notes: Vec<String>,
    pub metric: String,
    pub direction: Direction,
    pub policy: FamilyPolicy,
    pub replicates: usize,
    pub confidence: f64,
    pub seed: u64,
    pub quantile_rule: &'static str,
    pub rng_family: &'static str,
}

/// `100 · s / mean`, with `s` the sample standard deviation (divisor `m−1`).
pub fn cv(scores: &[f64]) -> Result<f64> {
    let m = scores.len();
    if m < 2 {
        return Err(Error::TooFewSystems { needed: 2, found: m });
    }
    let mean = scores.iter().sum::<f64>() / m as f64;
    if mean == 0.0 {
        return Err(Error::ZeroMean);
    }
    let ss: f64 = scores.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(100.0 * libm::sqrt(ss / (m - 1) as f64) / mean)
}

/// Possible percentage improvement `100·(1 − winner)`; only defined for
/// higher-is-better metrics whose ideal value is 1.
pub fn ppi(winner_score: f64, spec: &ScoreSpec) -> Option<f64> {
    (spec.capped_at_one && spec.direction == Direction::HigherBetter)
        .then_some(100.0 * (1.0 - winner_score))
}

/// `|score₁ − score_mid|` with `mid = ⌊m/2⌋ + 1` (1-based) on best-first
/// scores.
pub fn win_med_gap(ranked_scores: &[f64]) -> Result<f64> {
    let m = ranked_scores.len();
    if m < 2 {
        return Err(Error::TooFewSystems { needed: 2, found: m });
    }
    Ok(libm::fabs(ranked_scores[0] - ranked_scores[m / 2]))
}

/// One pair's p-values: raw under [`Correction::None`] plus every adjusted
/// value.
#[derive(Clone, Debug, PartialEq)]
pub struct PairPValues {
    pub pair: PairId,
    pub adjusted: BTreeMap<Correction, f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TieCounts {
    pub with_winner: BTreeMap<Correction, usize>,
    pub all_pairs: BTreeMap<Correction, usize>,
}

/// A pair is a tie under a correction when its (adjusted) p-value is not
/// below `alpha`. Pairs whose reference is rank 0 also count towards ties
/// with the winner.
pub fn tie_counts(pairs: &[PairPValues], alpha: f64) -> TieCounts {
    let mut out = TieCounts::default();
    for pair in pairs {
        for (&method, &p) in &pair.adjusted {
            let tie = usize::from(p >= alpha);
            *out.all_pairs.entry(method).or_default() += tie;
            if pair.pair.0 == 0 {
                *out.with_winner.entry(method).or_default() += tie;
            }
        }
    }
    out
}

/// Runs the full analysis and keeps only the competition summary.
pub fn build_report(
    table: &PredictionTable,
    spec: &ScoreSpec,
    plan: &BootstrapPlan,
    options: &AnalysisOptions,
) -> Result<CompetitionReport> {
    Ok(Analysis::run(table, spec, plan, options)?.report)
}
