//! Paired comparisons between systems.
//!
//! A [`PairedDelta`] holds the per-replicate score difference
//! `reference − competitor` (sign-adjusted so that positive always means the
//! reference did better) computed on shared resample indices. Because the
//! bootstrap distribution of the difference is centred on the observed
//! difference δ, the chance of the null producing a gap as large as δ is
//! estimated by the fraction of replicates exceeding 2δ.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::bootstrap::{distributions, percentile_interval, BootstrapPlan, Interval, SamplingDistribution};
use crate::data::PredictionTable;
use crate::error::{Error, Result};
use crate::metrics::{Direction, ScoreSpec};

#[derive(Clone, Debug, PartialEq)]
pub struct PairedDelta {
    pub reference: String,
    pub competitor: String,
    /// `values[r]` is the oriented difference on replicate `r`.
    pub values: Vec<f64>,
    /// δ(x) on the original test set, oriented.
    pub observed: f64,
    /// Set when the caller's order was swapped so the reference is the
    /// better-observed system.
    pub reoriented: bool,
}

impl PairedDelta {
    /// Difference `reference − competitor` as given, without reorienting.
    pub fn from_distributions(
        reference: &str,
        competitor: &str,
        reference_dist: &SamplingDistribution,
        competitor_dist: &SamplingDistribution,
        direction: Direction,
    ) -> Self {
        PairedDelta {
            reference: reference.to_string(),
            competitor: competitor.to_string(),
            values: reference_dist
                .values
                .iter()
                .zip(&competitor_dist.values)
                .map(|(a, b)| direction.orient(a - b))
                .collect(),
            observed: direction.orient(reference_dist.observed - competitor_dist.observed),
            reoriented: false,
        }
    }

    /// Swaps reference and competitor when the observed difference is
    /// negative.
    pub fn into_winner_first(mut self) -> Self {
        if self.observed < 0.0 {
            core::mem::swap(&mut self.reference, &mut self.competitor);
            self.observed = -self.observed;
            for v in &mut self.values {
                *v = -*v;
            }
            self.reoriented = true;
        }
        self
    }

    /// Comparing a system with itself is allowed but degenerate.
    pub fn is_self_comparison(&self) -> bool {
        self.reference == self.competitor
    }
}

fn pair_distributions(
    table: &PredictionTable,
    spec: &ScoreSpec,
    plan: &BootstrapPlan,
    reference: &str,
    competitor: &str,
) -> Result<(SamplingDistribution, SamplingDistribution)> {
    let a = table.system_index(reference)?;
    let b = table.system_index(competitor)?;
    let pair = table.retain_systems(|i, _| i == a || i == b);
    let mut d = distributions(&pair, spec, plan)?;
    Ok(match (d.len(), a < b) {
        (1, _) => (d[0].clone(), d.remove(0)),
        (_, true) => (d.remove(0), d.remove(0)),
        (_, false) => {
            let first = d.remove(0);
            (d.remove(0), first)
        }
    })
}

/// Paired bootstrap difference, reoriented so the better-observed system is
/// the reference (see [`PairedDelta::reoriented`]).
pub fn paired_difference(
    table: &PredictionTable,
    spec: &ScoreSpec,
    plan: &BootstrapPlan,
    reference: &str,
    competitor: &str,
) -> Result<PairedDelta> {
    Ok(paired_difference_as_given(table, spec, plan, reference, competitor)?.into_winner_first())
}

/// Paired bootstrap difference in the caller's orientation. Its p-value is
/// the one-sided test of "reference is not better", with the orientation
/// fixed before looking at the data.
pub fn paired_difference_as_given(
    table: &PredictionTable,
    spec: &ScoreSpec,
    plan: &BootstrapPlan,
    reference: &str,
    competitor: &str,
) -> Result<PairedDelta> {
    let (a, b) = pair_distributions(table, spec, plan, reference, competitor)?;
    Ok(PairedDelta::from_distributions(reference, competitor, &a, &b, spec.direction))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DifferenceInterval {
    pub interval: Interval,
    pub contains_zero: bool,
}

pub fn difference_ci(pd: &PairedDelta, confidence: f64) -> Result<DifferenceInterval> {
    let interval = percentile_interval(&pd.values, confidence)?;
    Ok(DifferenceInterval { interval, contains_zero: interval.contains(0.0) })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum PValueRule {
    /// `#{Δ_r > 2δ} / B`.
    #[default]
    Strict,
    /// `(#{Δ_r > 2δ} + 1) / (B + 1)`.
    Smoothed,
}

/// Number of replicates strictly above `2δ`.
pub fn exceedances(pd: &PairedDelta) -> usize {
    let threshold = 2.0 * pd.observed;
    pd.values.iter().filter(|&&v| v > threshold).count()
}

/// Fraction of replicates whose difference strictly exceeds `2δ`.
pub fn p_value(pd: &PairedDelta) -> f64 {
    p_value_with(pd, PValueRule::Strict)
}

pub fn p_value_with(pd: &PairedDelta, rule: PValueRule) -> f64 {
    let count = exceedances(pd) as f64;
    let b = pd.values.len() as f64;
    match rule {
        PValueRule::Strict if b == 0.0 => 1.0,
        PValueRule::Strict => count / b,
        PValueRule::Smoothed => (count + 1.0) / (b + 1.0),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Stars {
    None,
    /// p < .1
    Dagger,
    One,
    Two,
    Three,
}

impl Stars {
    pub fn as_str(self) -> &'static str {
        match self {
            Stars::None => "",
            Stars::Dagger => "†",
            Stars::One => "*",
            Stars::Two => "**",
            Stars::Three => "***",
        }
    }
}

impl fmt::Display for Stars {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn significance_stars(p: f64) -> Stars {
    if p < 0.001 {
        Stars::Three
    } else if p < 0.01 {
        Stars::Two
    } else if p < 0.05 {
        Stars::One
    } else if p < 0.1 {
        Stars::Dagger
    } else {
        Stars::None
    }
}

/// System indices ordered best-first by observed score; ties keep input
/// order.
pub fn rank(observed: &[f64], direction: Direction) -> Vec<usize> {
    let mut order: Vec<usize> = (0..observed.len()).collect();
    order.sort_by(|&a, &b| direction.orient(observed[b]).total_cmp(&direction.orient(observed[a])));
    order
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct MatrixEntry {
    pub delta: f64,
    pub p_value: f64,
    pub stars: Stars,
}

impl MatrixEntry {
    /// A zero observed difference is never marked, whatever the p-value.
    pub fn new(delta: f64, p_value: f64) -> Self {
        let stars = if delta == 0.0 { Stars::None } else { significance_stars(p_value) };
        MatrixEntry { delta, p_value, stars }
    }
}

/// Lower-triangular matrix of pairwise differences. `rows[i][j]` (`j < i`)
/// compares the rank-`j` system (reference) with the rank-`i` system.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DifferenceMatrix {
    /// System names best-first.
    pub systems: Vec<String>,
    pub rows: Vec<Vec<MatrixEntry>>,
}

impl DifferenceMatrix {
    pub fn from_distributions(
        names: &[&str],
        dists: &[SamplingDistribution],
        direction: Direction,
    ) -> Self {
        let observed: Vec<f64> = dists.iter().map(|d| d.observed).collect();
        let order = rank(&observed, direction);
        let rows = order
            .iter()
            .enumerate()
            .map(|(i, &row)| {
                order[..i]
                    .iter()
                    .map(|&col| {
                        let pd = PairedDelta::from_distributions(
                            names[col], names[row], &dists[col], &dists[row], direction,
                        );
                        let p = p_value(&pd);
                        MatrixEntry::new(pd.observed, p)
                    })
                    .collect()
            })
            .collect();
        DifferenceMatrix {
            systems: order.iter().map(|&i| names[i].to_string()).collect(),
            rows,
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&MatrixEntry> {
        self.rows.get(row)?.get(col)
    }
}

pub fn difference_matrix(
    table: &PredictionTable,
    spec: &ScoreSpec,
    plan: &BootstrapPlan,
) -> Result<DifferenceMatrix> {
    if table.systems().len() < 2 {
        return Err(Error::TooFewSystems { needed: 2, found: table.systems().len() });
    }
    let dists = distributions(table, spec, plan)?;
    let names: Vec<&str> = table.system_names().collect();
    Ok(DifferenceMatrix::from_distributions(&names, &dists, spec.direction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::ScoreSpec;
    use alloc::vec;
    use proptest::prelude::*;

    fn delta(values: Vec<f64>, observed: f64) -> PairedDelta {
        PairedDelta {
            reference: "a".into(),
            competitor: "b".into(),
            values,
            observed,
            reoriented: false,
        }
    }

    fn small_table() -> PredictionTable {
        PredictionTable::classification(
            &["a", "b", "a", "c", "b", "a", "c", "c"],
            &[
                ("good", &["a", "b", "a", "c", "b", "a", "c", "a"]),
                ("mid", &["a", "b", "b", "c", "a", "a", "c", "a"]),
                ("poor", &["b", "b", "b", "c", "a", "c", "a", "a"]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn self_comparison_is_all_zero() {
        let t = small_table();
        let pd = paired_difference(&t, &ScoreSpec::accuracy(), &BootstrapPlan::new(200, 3), "mid", "mid").unwrap();
        assert!(pd.is_self_comparison());
        assert_eq!(pd.observed, 0.0);
        assert!(pd.values.iter().all(|&v| v == 0.0));
        let ci = difference_ci(&pd, 0.95).unwrap();
        assert_eq!(ci.interval, Interval { lower: 0.0, mean: 0.0, upper: 0.0 });
        assert!(ci.contains_zero);
        assert_eq!(p_value(&pd), 0.0);
    }

    #[test]
    fn reversed_pair_is_reoriented() {
        let t = small_table();
        let spec = ScoreSpec::accuracy();
        let plan = BootstrapPlan::new(300, 11);
        let fwd = paired_difference(&t, &spec, &plan, "good", "poor").unwrap();
        let rev = paired_difference(&t, &spec, &plan, "poor", "good").unwrap();
        assert!(!fwd.reoriented);
        assert!(rev.reoriented);
        assert_eq!(fwd, PairedDelta { reoriented: false, ..rev });
        // 7/8 vs 2/8
        assert_eq!(fwd.observed, 0.625);
    }

    #[test]
    fn observed_deltas_are_antisymmetric() {
        let t = small_table();
        let spec = ScoreSpec::macro_f1(&["a", "c"]);
        let plan = BootstrapPlan::new(50, 0);
        let ab = paired_difference_as_given(&t, &spec, &plan, "mid", "poor").unwrap();
        let ba = paired_difference_as_given(&t, &spec, &plan, "poor", "mid").unwrap();
        assert_eq!(ab.observed, -ba.observed);
        for (x, y) in ab.values.iter().zip(&ba.values) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn lower_better_flips_sign() {
        let t = PredictionTable::regression(
            &[1.0, 2.0, 3.0, 4.0],
            &[("close", &[1.0, 2.0, 3.5, 4.0]), ("far", &[2.0, 3.0, 1.0, 4.0])],
        )
        .unwrap();
        let pd = paired_difference(&t, &ScoreSpec::mae(), &BootstrapPlan::new(100, 2), "close", "far").unwrap();
        assert!(!pd.reoriented);
        // MAE 0.125 vs 1.0
        assert!((pd.observed - 0.875).abs() < 1e-15);
    }

    #[test]
    fn constant_deltas_never_exceed_twice_themselves() {
        assert_eq!(p_value(&delta(vec![0.2; 100], 0.2)), 0.0);
    }

    #[test]
    fn hand_counted_p_value() {
        let pd = delta(vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.35, 0.31, 0.29, 0.05, 0.6], 0.15);
        // > 0.30: 0.4, 0.5, 0.35, 0.31, 0.6
        assert_eq!(exceedances(&pd), 5);
        assert_eq!(p_value(&pd), 0.5);
        assert_eq!(p_value_with(&pd, PValueRule::Smoothed), 6.0 / 11.0);
    }

    #[test]
    fn zero_delta_counts_strictly_positive() {
        let pd = delta(vec![-0.1, 0.0, 0.1, 0.2], 0.0);
        assert_eq!(p_value(&pd), 0.5);
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(significance_stars(0.0012), Stars::Two);
        assert_eq!(significance_stars(0.0009), Stars::Three);
        assert_eq!(significance_stars(0.0330), Stars::One);
        assert_eq!(significance_stars(0.0551), Stars::Dagger);
        assert_eq!(significance_stars(0.1), Stars::None);
        assert_eq!(significance_stars(0.5), Stars::None);
        assert_eq!(Stars::Dagger.to_string(), "†");
    }

    #[test]
    fn identical_pair_matrix() {
        let g = ["x", "y", "x"];
        let t = PredictionTable::classification(&g, &[("a", &["x", "x", "x"]), ("b", &["x", "x", "x"])]).unwrap();
        let m = difference_matrix(&t, &ScoreSpec::accuracy(), &BootstrapPlan::new(100, 1)).unwrap();
        assert_eq!(m.systems, ["a", "b"]);
        assert_eq!(m.rows[0].len(), 0);
        assert_eq!(m.rows[1], [MatrixEntry { delta: 0.0, p_value: 0.0, stars: Stars::None }]);
    }

    #[test]
    fn matrix_matches_pairwise_recomputation() {
        let t = small_table();
        let spec = ScoreSpec::macro_f1(&["a", "b", "c"]);
        let plan = BootstrapPlan::new(400, 21);
        let m = difference_matrix(&t, &spec, &plan).unwrap();
        let observed: Vec<f64> = t
            .systems()
            .iter()
            .map(|s| crate::metrics::Scorer::new(&spec, &t).unwrap().score(t.gold(), &s.predictions))
            .collect();
        assert_eq!(m.systems, ["good", "mid", "poor"]);
        for i in 0..3 {
            for j in 0..i {
                let e = m.get(i, j).unwrap();
                let pd = paired_difference(&t, &spec, &plan, &m.systems[j], &m.systems[i]).unwrap();
                let (a, b) = (t.system_index(&m.systems[j]).unwrap(), t.system_index(&m.systems[i]).unwrap());
                assert!((e.delta - (observed[a] - observed[b])).abs() < 1e-15);
                assert_eq!(e.p_value, p_value(&pd));
                assert_eq!(e.stars, MatrixEntry::new(e.delta, e.p_value).stars);
            }
        }
    }

    #[test]
    fn rank_breaks_ties_by_input_order() {
        assert_eq!(rank(&[0.5, 0.7, 0.5, 0.9], Direction::HigherBetter), [3, 1, 0, 2]);
        assert_eq!(rank(&[0.5, 0.7, 0.5, 0.9], Direction::LowerBetter), [0, 2, 1, 3]);
    }

    proptest! {
        #[test]
        fn p_value_non_increasing_in_delta(noise in proptest::collection::vec(-0.2f64..0.2, 5..80), d1 in 0.0f64..0.3, extra in 0.0f64..0.3) {
            // Centred distributions shifted with the observed difference.
            let d2 = d1 + extra;
            let a = delta(noise.iter().map(|e| d1 + e).collect(), d1);
            let b = delta(noise.iter().map(|e| d2 + e).collect(), d2);
            prop_assert!(p_value(&b) <= p_value(&a));
        }
    }
}
