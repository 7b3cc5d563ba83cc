//! Multiple-comparison adjustment of p-value families.
//!
//! With `k` p-values sorted ascending `p(1) ≤ … ≤ p(k)`:
//!
//! * Bonferroni: `min(1, k·p)`
//! * Holm: `adj(i) = min(1, max_{j≤i} (k−j+1)·p(j))`
//! * Benjamini–Hochberg: `adj(i) = min(1, min_{j≥i} (k/j)·p(j))`

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Correction {
    /// Raw p-values.
    None,
    Bonferroni,
    Holm,
    /// Benjamini–Hochberg (false discovery rate).
    Bh,
}

impl Correction {
    pub const ALL: [Correction; 4] =
        [Correction::None, Correction::Bonferroni, Correction::Holm, Correction::Bh];

    pub fn as_str(self) -> &'static str {
        match self {
            Correction::None => "none",
            Correction::Bonferroni => "bonferroni",
            Correction::Holm => "holm",
            Correction::Bh => "bh",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Some(Correction::None),
            "bonferroni" | "bonf" => Some(Correction::Bonferroni),
            "holm" => Some(Correction::Holm),
            "bh" | "fdr" | "fdr_bh" => Some(Correction::Bh),
            _ => None,
        }
    }
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How pairwise hypotheses are grouped into families.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum FamilyPolicy {
    /// One family: the winner against each of the other `m−1`.
    VsWinner,
    /// One family per rank `i`: rank `i` against every lower rank.
    #[default]
    PerReference,
    /// All `m(m−1)/2` pairs in one family.
    Global,
}

impl FamilyPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyPolicy::VsWinner => "vs-winner",
            FamilyPolicy::PerReference => "per-reference",
            FamilyPolicy::Global => "global",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "vs-winner" => Some(FamilyPolicy::VsWinner),
            "per-reference" => Some(FamilyPolicy::PerReference),
            "global" => Some(FamilyPolicy::Global),
            _ => None,
        }
    }
}

/// Pair of 0-based ranks `(reference, competitor)` with `reference < competitor`.
pub type PairId = (usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct PValueFamily<K = PairId> {
    entries: Vec<(K, f64)>,
}

impl<K: Ord + Clone> PValueFamily<K> {
    pub fn new(entries: Vec<(K, f64)>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for (id, p) in &entries {
            check_p(*p)?;
            if !ids.insert(id.clone()) {
                return Err(Error::DuplicatePair);
            }
        }
        Ok(PValueFamily { entries })
    }

    pub fn entries(&self) -> &[(K, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn adjust(&self, method: Correction) -> Result<BTreeMap<K, f64>> {
        let raw: Vec<f64> = self.entries.iter().map(|(_, p)| *p).collect();
        let adjusted = adjust(&raw, method)?;
        Ok(self.entries.iter().map(|(k, _)| k.clone()).zip(adjusted).collect())
    }
}

fn check_p(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidPValue(p))
    }
}

/// Adjusted p-values in input order.
pub fn adjust(p: &[f64], method: Correction) -> Result<Vec<f64>> {
    if p.is_empty() {
        return Err(Error::Empty("p-value family"));
    }
    for &x in p {
        check_p(x)?;
    }
    let k = p.len() as f64;
    if method == Correction::None {
        return Ok(p.to_vec());
    }
    if method == Correction::Bonferroni {
        return Ok(p.iter().map(|&x| (k * x).min(1.0)).collect());
    }

    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut out = alloc::vec![0.0; p.len()];
    match method {
        Correction::Holm => {
            let mut running = 0.0f64;
            for (j, &i) in order.iter().enumerate() {
                running = running.max((k - j as f64) * p[i]);
                out[i] = running.min(1.0);
            }
        }
        Correction::Bh => {
            let mut running = 1.0f64;
            for (j, &i) in order.iter().enumerate().rev() {
                running = running.min(k / (j as f64 + 1.0) * p[i]);
                out[i] = running.min(1.0);
            }
        }
        Correction::None | Correction::Bonferroni => unreachable!(),
    }
    Ok(out)
}

/// Families over `m` ranked systems. `raw(i, j)` is the p-value of rank `i`
/// against rank `j > i`.
pub fn build_families(
    m: usize,
    raw: impl Fn(usize, usize) -> f64,
    policy: FamilyPolicy,
) -> Result<Vec<PValueFamily>> {
    if m < 2 {
        return Err(Error::TooFewSystems { needed: 2, found: m });
    }
    let block = |i: usize| (i + 1..m).map(|j| ((i, j), raw(i, j))).collect::<Vec<_>>();
    match policy {
        FamilyPolicy::VsWinner => Ok(alloc::vec![PValueFamily::new(block(0))?]),
        FamilyPolicy::PerReference => (0..m - 1).map(|i| PValueFamily::new(block(i))).collect(),
        FamilyPolicy::Global => Ok(alloc::vec![PValueFamily::new(
            (0..m - 1).flat_map(block).collect()
        )?]),
    }
}

/// Rounds to `decimals` places, ties to even. Values within 1e-6 of a
/// rounding midpoint (in units of the last place) count as the midpoint, so
/// binary noise such as `58.49999999999999` rounds like `58.5`.
pub fn round_half_even(x: f64, decimals: u32) -> f64 {
    let scale = libm::pow(10.0, decimals as f64);
    let y = libm::round(x * scale * 1e6) / 1e6;
    let floor = libm::floor(y);
    let frac = y - floor;
    let up = frac > 0.5 || (frac == 0.5 && libm::fmod(floor, 2.0) != 0.0);
    let r = if up { floor + 1.0 } else { floor };
    r / scale
}
