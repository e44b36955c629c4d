use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{Condition, StructureFactor};
use super::protocol::ProtocolResult;
use crate::stats::{bootstrap_indices, median, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Confirmed,
    NotDetected,
    Reversed,
    Underpowered,
}

impl Verdict {
    fn of(ci: &Interval) -> Self {
        if ci.lower > 0.0 {
            Verdict::Confirmed
        } else if ci.upper < 0.0 {
            Verdict::Reversed
        } else {
            Verdict::NotDetected
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub seeds: usize,
    pub uncensored: usize,
    pub censored: usize,
    /// Median of rank values; censored seeds count as cap + 1.
    pub median_trials: Option<f64>,
}

/// Predicted `faster < slower`, tested as `median(slower) - median(faster) > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseDifference {
    pub faster: Condition,
    pub slower: Condition,
    pub paired_seeds: usize,
    pub interval: Option<Interval>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub structure_factor: StructureFactor,
    pub summaries: Vec<ConditionSummary>,
    pub differences: Vec<PairwiseDifference>,
    pub underpowered: bool,
    pub censoring_note: String,
}

impl OrderingReport {
    pub fn all_confirmed(&self) -> bool {
        !self.underpowered && self.differences.iter().all(|d| d.verdict == Verdict::Confirmed)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapSettings {
    pub resamples: usize,
    pub level: f64,
    pub seed: u64,
    pub min_uncensored: usize,
}

impl Default for BootstrapSettings {
    fn default() -> Self {
        Self {
            resamples: 10_000,
            level: 0.95,
            seed: 0,
            min_uncensored: 10,
        }
    }
}

type RankTable = BTreeMap<u64, f64>;

fn ranks(results: &[ProtocolResult], c: Condition, f: StructureFactor) -> RankTable {
    results
        .iter()
        .filter(|r| r.condition == c && r.structure_factor == f)
        .map(|r| (r.seed, r.adaptation.rank_value()))
        .collect()
}

fn uncensored(results: &[ProtocolResult], c: Condition, f: StructureFactor) -> usize {
    results
        .iter()
        .filter(|r| r.condition == c && r.structure_factor == f && !r.adaptation.censored())
        .count()
}

fn paired(a: &RankTable, b: &RankTable) -> Vec<(f64, f64)> {
    a.iter()
        .filter_map(|(s, x)| b.get(s).map(|y| (*x, *y)))
        .collect()
}

fn median_of(ix: &[usize], col: impl Fn(usize) -> f64) -> f64 {
    median(&ix.iter().map(|&i| col(i)).collect::<Vec<_>>()).unwrap_or(f64::NAN)
}

/// Difference of medians `median(slower) - median(faster)` over seeds present in both.
fn median_difference(pairs: &[(f64, f64)], settings: &BootstrapSettings) -> Option<Interval> {
    bootstrap_indices(pairs.len(), settings.resamples, settings.level, settings.seed, |ix| {
        median_of(ix, |i| pairs[i].1) - median_of(ix, |i| pairs[i].0)
    })
}

const PREDICTED: [(Condition, Condition); 2] = [
    (Condition::CorrectRepr, Condition::Control),
    (Condition::Control, Condition::FakeMaintained),
];

/// Median trials-to-criterion per condition and the predicted pairwise orderings.
pub fn compare_conditions(
    results: &[ProtocolResult],
    factor: StructureFactor,
    settings: &BootstrapSettings,
) -> OrderingReport {
    let summaries: Vec<ConditionSummary> = Condition::ALL
        .iter()
        .map(|&c| {
            let r = ranks(results, c, factor);
            let u = uncensored(results, c, factor);
            ConditionSummary {
                condition: c,
                seeds: r.len(),
                uncensored: u,
                censored: r.len() - u,
                median_trials: median(&r.values().copied().collect::<Vec<_>>()),
            }
        })
        .collect();
    let underpowered = summaries.iter().any(|s| s.uncensored < settings.min_uncensored);
    let differences = PREDICTED
        .iter()
        .map(|&(faster, slower)| {
            let pairs = paired(&ranks(results, faster, factor), &ranks(results, slower, factor));
            let interval = median_difference(&pairs, settings);
            let verdict = match interval {
                Some(ci) if !underpowered => Verdict::of(&ci),
                _ => Verdict::Underpowered,
            };
            PairwiseDifference {
                faster,
                slower,
                paired_seeds: pairs.len(),
                interval,
                verdict,
            }
        })
        .collect();
    let censored: usize = summaries.iter().map(|s| s.censored).sum();
    let censoring_note = if censored == 0 {
        "no censored seeds".to_string()
    } else {
        let parts: Vec<String> = summaries
            .iter()
            .map(|s| format!("{} {}/{}", s.condition, s.censored, s.seeds))
            .collect();
        format!("censored seeds ranked above the cap: {}", parts.join(", "))
    };
    OrderingReport {
        structure_factor: factor,
        summaries,
        differences,
        underpowered,
        censoring_note,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionReport {
    /// Correction effect `median(c) - median(a)` under structured trees.
    pub structured: Option<Interval>,
    pub null: Option<Interval>,
    /// `effect(structured) - effect(null)` on the same resampled seeds.
    pub difference: Option<Interval>,
    pub paired_seeds: usize,
    pub underpowered: bool,
}

impl InteractionReport {
    /// Effect under structure only, with a positive difference of differences.
    pub fn confirmed(&self) -> bool {
        match (&self.structured, &self.null, &self.difference) {
            (Some(s), Some(n), Some(d)) => !self.underpowered && s.lower > 0.0 && n.contains_zero() && d.estimate > 0.0,
            _ => false,
        }
    }
}

/// Correction effect per structure factor and its difference of differences.
pub fn structured_vs_null_effect(results: &[ProtocolResult], settings: &BootstrapSettings) -> InteractionReport {
    let cells = [
        (Condition::CorrectRepr, StructureFactor::Structured),
        (Condition::Control, StructureFactor::Structured),
        (Condition::CorrectRepr, StructureFactor::Null),
        (Condition::Control, StructureFactor::Null),
    ];
    let underpowered = cells
        .iter()
        .any(|&(c, f)| uncensored(results, c, f) < settings.min_uncensored);
    let tables: Vec<RankTable> = cells.iter().map(|&(c, f)| ranks(results, c, f)).collect();
    let seeds: Vec<u64> = tables[0]
        .keys()
        .filter(|s| tables[1..].iter().all(|t| t.contains_key(s)))
        .copied()
        .collect();
    let col = |k: usize| -> Vec<f64> { seeds.iter().map(|s| tables[k][s]).collect() };
    let (a_s, c_s, a_n, c_n) = (col(0), col(1), col(2), col(3));
    let effect = |ix: &[usize], a: &[f64], c: &[f64]| median_of(ix, |i| c[i]) - median_of(ix, |i| a[i]);
    let boot = |stat: &dyn Fn(&[usize]) -> f64| {
        bootstrap_indices(seeds.len(), settings.resamples, settings.level, settings.seed, stat)
    };
    InteractionReport {
        structured: boot(&|ix| effect(ix, &a_s, &c_s)),
        null: boot(&|ix| effect(ix, &a_n, &c_n)),
        difference: boot(&|ix| effect(ix, &a_s, &c_s) - effect(ix, &a_n, &c_n)),
        paired_seeds: seeds.len(),
        underpowered,
    }
}
