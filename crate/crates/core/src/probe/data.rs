use std::io::Write;

use serde::Serialize;

use super::linear::{LinearProbe, ProbeSample};
use crate::error::Result;
use crate::metarl::{rollout, RecurrentPolicy, Sampling};
use crate::planning::{classify_episode, generate_tree, Strategy, Structure, TreeConfig};
use crate::rng::{derive_seed, seeded};

/// Hidden states from `episodes` rollouts on an even mix of far- and near-sighted trees.
///
/// Each episode is labelled by its own inspection pattern; unclassified
/// episodes and the first decision (taken before any observation) are
/// dropped. With `balance`, episodes of the majority class are subsampled so
/// both classes contribute the same number of episodes.
pub fn collect_samples(
    policy: &RecurrentPolicy,
    cfg: &TreeConfig,
    episodes: usize,
    seed: u64,
    balance: bool,
) -> Result<Vec<ProbeSample>> {
    let mut rng = seeded(seed, &[0x9B1]);
    let mut per_episode: Vec<(Strategy, Vec<ProbeSample>)> = Vec::with_capacity(episodes);
    for e in 0..episodes {
        let s = if e % 2 == 0 {
            Structure::FarSighted
        } else {
            Structure::NearSighted
        };
        let tree = generate_tree(cfg, s, derive_seed(seed, &[0x9B2, e as u64]));
        let ro = rollout(policy, cfg, &tree, &mut rng, Sampling::Stochastic, false, None)?;
        let label = classify_episode(cfg, &ro.log).label;
        if label == Strategy::Unclassified {
            continue;
        }
        let samples = ro
            .hidden
            .into_iter()
            .enumerate()
            .skip(1)
            .map(|(step, hidden)| ProbeSample {
                episode: e,
                step,
                hidden,
                label,
            })
            .collect();
        per_episode.push((label, samples));
    }
    if balance {
        let far = per_episode.iter().filter(|(l, _)| *l == Strategy::FarSighted).count();
        let keep = far.min(per_episode.len() - far);
        let (mut nf, mut nn) = (0, 0);
        per_episode.retain(|(l, _)| {
            let c = if *l == Strategy::FarSighted { &mut nf } else { &mut nn };
            *c += 1;
            *c <= keep
        });
    }
    Ok(per_episode.into_iter().flat_map(|(_, s)| s).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReportRow {
    pub structure: Structure,
    pub label: Strategy,
    pub bin_low: f64,
    pub bin_high: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureDecoding {
    pub structure: Structure,
    pub decision_points: usize,
    pub accuracy: f64,
    pub mean_projection_far: f64,
    pub mean_projection_near: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub per_structure: Vec<StructureDecoding>,
    pub overall_accuracy: f64,
    pub histogram: Vec<ProbeReportRow>,
}

impl ProbeReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.histogram {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

const BINS: usize = 20;

/// Decodes every decision point of `n` episodes per structure and compares to behaviour.
pub fn probe_report(
    policy: &RecurrentPolicy,
    cfg: &TreeConfig,
    probe: &LinearProbe,
    n: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let mut per_structure = Vec::new();
    let mut histogram = Vec::new();
    let (mut hits_all, mut total_all) = (0usize, 0usize);
    for s in [Structure::FarSighted, Structure::NearSighted] {
        let mut rng = seeded(seed, &[0x9B3, s as u64]);
        let mut proj: Vec<(Strategy, f64)> = Vec::new();
        let mut hits = 0usize;
        for e in 0..n {
            let tree = generate_tree(cfg, s, derive_seed(seed, &[0x9B4, s as u64, e as u64]));
            let ro = rollout(policy, cfg, &tree, &mut rng, Sampling::Stochastic, false, None)?;
            let label = classify_episode(cfg, &ro.log).label;
            if label == Strategy::Unclassified {
                continue;
            }
            for h in ro.hidden.iter().skip(1) {
                if probe.predict(h) == label {
                    hits += 1;
                }
                proj.push((label, probe.projection(h)));
            }
        }
        let mean_of = |l: Strategy| {
            let v: Vec<f64> = proj.iter().filter(|p| p.0 == l).map(|p| p.1).collect();
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        per_structure.push(StructureDecoding {
            structure: s,
            decision_points: proj.len(),
            accuracy: if proj.is_empty() { f64::NAN } else { hits as f64 / proj.len() as f64 },
            mean_projection_far: mean_of(Strategy::FarSighted),
            mean_projection_near: mean_of(Strategy::NearSighted),
        });
        hits_all += hits;
        total_all += proj.len();

        let lo = proj.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = proj.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() && hi.is_finite() {
            let width = ((hi - lo) / BINS as f64).max(1e-12);
            for label in [Strategy::FarSighted, Strategy::NearSighted] {
                let mut counts = [0usize; BINS];
                for p in proj.iter().filter(|p| p.0 == label) {
                    let b = (((p.1 - lo) / width) as usize).min(BINS - 1);
                    counts[b] += 1;
                }
                for (b, &count) in counts.iter().enumerate() {
                    histogram.push(ProbeReportRow {
                        structure: s,
                        label,
                        bin_low: lo + b as f64 * width,
                        bin_high: lo + (b + 1) as f64 * width,
                        count,
                    });
                }
            }
        }
    }
    Ok(ProbeReport {
        per_structure,
        overall_accuracy: if total_all == 0 { f64::NAN } else { hits_all as f64 / total_all as f64 },
        histogram,
    })
}
