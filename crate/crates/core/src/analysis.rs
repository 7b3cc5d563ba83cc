//! One pass over a competition: per-system intervals, paired differences
//! for every pair of competitors, corrected p-values, the difference matrix
//! and the competition report, all from a single set of bootstrap
//! replicates.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::bootstrap::{distributions, percentile_interval, BootstrapPlan, QUANTILE_RULE};
use crate::corrections::{build_families, Correction, FamilyPolicy, PairId};
use crate::data::PredictionTable;
use crate::error::{Error, Result};
use crate::inference::{difference_ci, p_value_with, DifferenceMatrix, MatrixEntry, PValueRule, PairedDelta, rank};
use crate::metrics::{Direction, ScoreSpec};
use crate::report::{cv, ppi, tie_counts, win_med_gap, CompetitionReport, PairPValues};
use crate::rng::RNG_FAMILY;

pub const DEFAULT_GOLD_ALIAS: &str = "Gold_Standard";

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct AnalysisOptions {
    pub policy: FamilyPolicy,
    /// Corrections to apply; raw p-values are always kept.
    pub corrections: Vec<Correction>,
    /// A system with this name that reproduces gold exactly is not a
    /// competitor.
    pub gold_alias: Option<String>,
    pub p_rule: PValueRule,
    /// Keep every system's replicate scores in the performance rows.
    pub keep_samples: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            policy: FamilyPolicy::PerReference,
            corrections: alloc::vec![Correction::Bonferroni, Correction::Holm, Correction::Bh],
            gold_alias: Some(DEFAULT_GOLD_ALIAS.to_string()),
            p_rule: PValueRule::Strict,
            keep_samples: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PerformanceSummary {
    pub system: String,
    pub observed: f64,
    pub boot_mean: f64,
    pub lci: f64,
    pub uci: f64,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none"))]
    pub samples: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DifferenceSummary {
    pub reference: String,
    pub competitor: String,
    /// Ranks (0 = winner) of reference and competitor.
    pub ranks: PairId,
    pub observed_delta: f64,
    pub lci: f64,
    pub mean: f64,
    pub uci: f64,
    pub contains_zero: bool,
    pub p_value: f64,
    /// Adjusted p-value per requested correction.
    pub adjusted: BTreeMap<Correction, f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Analysis {
    /// Best-first.
    pub performance: Vec<PerformanceSummary>,
    /// Every pair `(i, j)`, `i < j` in rank order; winner pairs come first.
    pub pairs: Vec<DifferenceSummary>,
    pub matrix: DifferenceMatrix,
    pub report: CompetitionReport,
    /// Replicate differences of the winner against each other competitor,
    /// best-first.
    pub winner_deltas: Vec<PairedDelta>,
}

impl Analysis {
    pub fn run(
        table: &PredictionTable,
        spec: &ScoreSpec,
        plan: &BootstrapPlan,
        options: &AnalysisOptions,
    ) -> Result<Self> {
        plan.check()?;
        spec.check()?;

        let mut notes = Vec::new();
        let mut excluded = Vec::new();
        let alias = options.gold_alias.as_deref();
        let competitors = table.retain_systems(|i, s| {
            if alias != Some(s.name.as_str()) {
                return true;
            }
            if table.is_perfect(i) {
                excluded.push(s.name.clone());
                false
            } else {
                notes.push(format!(
                    "`{}` matches the gold alias but does not reproduce gold; kept as a competitor",
                    s.name
                ));
                true
            }
        });
        let m = competitors.systems().len();
        if m < 2 {
            return Err(Error::TooFewSystems { needed: 2, found: m });
        }

        let dists = distributions(&competitors, spec, plan)?;
        let names: Vec<&str> = competitors.system_names().collect();
        let observed: Vec<f64> = dists.iter().map(|d| d.observed).collect();
        let order = rank(&observed, spec.direction);
        let ranked_scores: Vec<f64> = order.iter().map(|&i| observed[i]).collect();
        for w in order.windows(2) {
            if observed[w[0]] == observed[w[1]] {
                notes.push(format!(
                    "`{}` and `{}` tie on observed score; ranked by column order",
                    names[w[0]], names[w[1]]
                ));
            }
        }

        let performance = order
            .iter()
            .map(|&i| {
                let ci = percentile_interval(&dists[i].values, plan.confidence)?;
                Ok(PerformanceSummary {
                    system: names[i].to_string(),
                    observed: observed[i],
                    boot_mean: ci.mean,
                    lci: ci.lower,
                    uci: ci.upper,
                    samples: options.keep_samples.then(|| dists[i].values.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut pairs = Vec::with_capacity(m * (m - 1) / 2);
        let mut winner_deltas = Vec::with_capacity(m - 1);
        let mut raw = BTreeMap::new();
        for i in 0..m {
            for j in i + 1..m {
                let (a, b) = (order[i], order[j]);
                let pd = PairedDelta::from_distributions(names[a], names[b], &dists[a], &dists[b], spec.direction);
                let ci = difference_ci(&pd, plan.confidence)?;
                let p = p_value_with(&pd, options.p_rule);
                raw.insert((i, j), p);
                pairs.push(DifferenceSummary {
                    reference: pd.reference.clone(),
                    competitor: pd.competitor.clone(),
                    ranks: (i, j),
                    observed_delta: pd.observed,
                    lci: ci.interval.lower,
                    mean: ci.interval.mean,
                    uci: ci.interval.upper,
                    contains_zero: ci.contains_zero,
                    p_value: p,
                    adjusted: BTreeMap::new(),
                });
                if i == 0 {
                    winner_deltas.push(pd);
                }
            }
        }

        // Pairs outside every family (vs-winner policy) keep their raw value.
        let mut adjusted: BTreeMap<PairId, BTreeMap<Correction, f64>> = raw
            .iter()
            .map(|(&id, &p)| (id, options.corrections.iter().map(|&c| (c, p)).collect()))
            .collect();
        for family in build_families(m, |i, j| raw[&(i, j)], options.policy)? {
            for &method in &options.corrections {
                for (id, p) in family.adjust(method)? {
                    adjusted.get_mut(&id).expect("pair exists").insert(method, p);
                }
            }
        }
        for pair in &mut pairs {
            pair.adjusted = adjusted.remove(&pair.ranks).unwrap_or_default();
        }

        let matrix = DifferenceMatrix {
            systems: order.iter().map(|&i| names[i].to_string()).collect(),
            rows: (0..m)
                .map(|row| {
                    (0..row)
                        .map(|col| {
                            let pair = &pairs[pair_slot(m, col, row)];
                            MatrixEntry::new(pair.observed_delta, pair.p_value)
                        })
                        .collect()
                })
                .collect(),
        };

        let tie_input: Vec<PairPValues> = pairs
            .iter()
            .map(|p| {
                let mut all = p.adjusted.clone();
                all.insert(Correction::None, p.p_value);
                PairPValues { pair: p.ranks, adjusted: all }
            })
            .collect();
        let ties = tie_counts(&tie_input, plan.alpha);

        let cv_value = match cv(&ranked_scores) {
            Ok(v) => Some(v),
            Err(Error::ZeroMean) => {
                notes.push("mean score is zero; CV undefined".to_string());
                None
            }
            Err(e) => return Err(e),
        };
        let cv_comparable = spec.direction == Direction::HigherBetter && spec.capped_at_one;
        if !cv_comparable {
            notes.push("CV of an unbounded or lower-is-better metric is not comparable across metrics".to_string());
        }

        let report = CompetitionReport {
            n: table.n(),
            m,
            possible_comparisons: m * (m - 1) / 2,
            ties_with_winner: ties.with_winner,
            ties_all_pairs: ties.all_pairs,
            win_med_gap: win_med_gap(&ranked_scores)?,
            cv: cv_value,
            cv_comparable,
            ppi: ppi(ranked_scores[0], spec),
            alpha: plan.alpha,
            winner: names[order[0]].to_string(),
            ranking: order.iter().map(|&i| names[i].to_string()).collect(),
            excluded,
            notes,
            metric: spec.metric.to_string(),
            direction: spec.direction,
            policy: options.policy,
            replicates: plan.replicates,
            confidence: plan.confidence,
            seed: plan.seed,
            quantile_rule: QUANTILE_RULE,
            rng_family: RNG_FAMILY,
        };

        Ok(Analysis { performance, pairs, matrix, report, winner_deltas })
    }

    /// Differences of the winner against each other competitor, best-first.
    pub fn vs_winner(&self) -> impl Iterator<Item = &DifferenceSummary> {
        self.pairs.iter().filter(|p| p.ranks.0 == 0)
    }

    pub fn pair(&self, reference_rank: usize, competitor_rank: usize) -> Option<&DifferenceSummary> {
        let m = self.performance.len();
        (reference_rank < competitor_rank && competitor_rank < m)
            .then(|| &self.pairs[pair_slot(m, reference_rank, competitor_rank)])
    }
}

/// Position of pair `(i, j)`, `i < j`, in row-major upper-triangle order.
fn pair_slot(m: usize, i: usize, j: usize) -> usize {
    i * (2 * m - i - 1) / 2 + (j - i - 1)
}
