use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{
    check_causal_closure, classify_regime, FunctionalState, LocalOperation, Regime, RuleFingerprint,
    Trace, TraceRecorder,
};
use crate::planning::{generate_tree, Action, Episode, EpisodeLog, LoggedAction, PlanningTree, Structure, TreeConfig};
use crate::rng::derive_seed;

/// Explicit payoff norm: `[reward weight, inspection-cost weight]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormVector {
    pub weights: Vec<f64>,
}

impl NormVector {
    pub fn new(reward: f64, cost: f64) -> Result<Self> {
        let n = Self {
            weights: vec![reward, cost],
        };
        n.validate()?;
        Ok(n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.len() < 2 {
            return Err(Error::InvalidInput("a norm needs at least two weights".into()));
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite norm weights {:?}", self.weights)));
        }
        Ok(())
    }

    pub fn reward_weight(&self) -> f64 {
        self.weights[0]
    }

    pub fn cost_weight(&self) -> f64 {
        self.weights[1]
    }

    pub fn add(&self, delta: &NormVector) -> Result<NormVector> {
        if delta.weights.len() != self.weights.len() {
            return Err(Error::InvalidInput("norm edit has the wrong length".into()));
        }
        let out = NormVector {
            weights: self.weights.iter().zip(&delta.weights).map(|(a, b)| a + b).collect(),
        };
        out.validate()?;
        Ok(out)
    }

    pub fn fingerprint(&self, level: usize) -> RuleFingerprint {
        RuleFingerprint::from_reals(level, "norm", &self.weights)
    }

    /// Norm-weighted score of a finished episode.
    pub fn score(&self, cfg: &TreeConfig, tree: &PlanningTree, log: &EpisodeLog) -> f64 {
        let path_sum: f64 = log
            .actions
            .iter()
            .find_map(|a| match a {
                LoggedAction::Commit { path } => Some(path.iter().map(|&n| tree.rewards[n]).sum()),
                LoggedAction::Inspect { .. } => None,
            })
            .unwrap_or(0.0);
        self.reward_weight() * path_sum - self.cost_weight() * cfg.cost * log.inspection_count() as f64
    }
}

/// `E[max(u, X)]` for `X ~ U[-s, s]`.
fn expected_max_uniform(u: f64, s: f64) -> f64 {
    if s <= 0.0 {
        u.max(0.0)
    } else if u >= s {
        u
    } else if u <= -s {
        0.0
    } else {
        (u + s) * (u + s) / (4.0 * s)
    }
}

/// Expected gain in the best revealed path sum from inspecting `node` alone.
fn myopic_gain(cfg: &TreeConfig, ep: &Episode<'_>, structure: Structure, node: usize) -> f64 {
    let value = |p: &Vec<usize>| -> f64 { p.iter().filter_map(|&n| ep.revealed_value(n)).sum() };
    let mut through = f64::NEG_INFINITY;
    let mut other = f64::NEG_INFINITY;
    for p in cfg.paths() {
        let v = value(&p);
        if p.contains(&node) {
            through = through.max(v);
        } else {
            other = other.max(v);
        }
    }
    let s = cfg.scales_for(structure)[cfg.depth_of(node) - 1];
    if other == f64::NEG_INFINITY {
        return 0.0;
    }
    let current = through.max(other);
    through + expected_max_uniform(other - through, s) - current
}

/// Greedy inspection policy for a norm: inspect the node with the largest
/// positive norm-weighted myopic value of information, otherwise commit.
///
/// Positive rescaling of the norm leaves every comparison unchanged.
pub fn norm_greedy_episode(cfg: &TreeConfig, tree: &PlanningTree, norm: &NormVector) -> Result<EpisodeLog> {
    let mut ep = Episode::new(cfg, tree);
    while !ep.is_done() {
        let mut best: Option<(f64, usize)> = None;
        for node in 1..cfg.node_count() {
            if ep.is_revealed(node) {
                continue;
            }
            let v = norm.reward_weight() * myopic_gain(cfg, &ep, tree.structure, node)
                - norm.cost_weight() * cfg.cost;
            if v > 0.0 && best.is_none_or(|(b, _)| v > b) {
                best = Some((v, node));
            }
        }
        match best {
            Some((_, node)) => ep.step(Action::Inspect(node))?,
            None => ep.step(Action::Commit)?,
        };
    }
    Ok(ep.into_log())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandboxRecord {
    pub current: NormVector,
    pub delta: NormVector,
    pub proposed: NormVector,
    pub rollouts: usize,
    pub seed: u64,
    /// Mean current-norm score of the unmodified agent.
    pub incumbent_score: f64,
    /// Mean current-norm score of the modified copy on the same trees.
    pub copy_score: f64,
    pub adopted: bool,
    pub regime: Regime,
    pub closure_passed: bool,
}

fn sandbox_state(norm: &NormVector) -> Result<FunctionalState> {
    FunctionalState::new(
        0,
        vec![
            RuleFingerprint::symbolic(0, "inspection-choices"),
            RuleFingerprint::symbolic(1, "norm-greedy-inspection"),
            norm.fingerprint(2),
        ],
        vec![true, true, true],
        vec![true, false, true],
    )
}

fn sandbox_tree(cfg: &TreeConfig, seed: u64, i: usize) -> PlanningTree {
    let s = if i % 2 == 0 {
        Structure::FarSighted
    } else {
        Structure::NearSighted
    };
    generate_tree(cfg, s, derive_seed(seed, &[0x5A, i as u64]))
}

/// Tries a norm edit on a copy and keeps it only if the copy does strictly
/// better under the norm currently in force (paired trees, ties rejected).
pub fn sandbox_revision(
    cfg: &TreeConfig,
    norm: &NormVector,
    delta: &NormVector,
    rollouts: usize,
    seed: u64,
) -> Result<(SandboxRecord, Trace)> {
    if rollouts == 0 {
        return Err(Error::InvalidInput("sandbox needs at least one rollout".into()));
    }
    norm.validate()?;
    let proposed = norm.add(delta)?;
    let (mut inc, mut copy) = (0.0, 0.0);
    for i in 0..rollouts {
        let tree = sandbox_tree(cfg, seed, i);
        inc += norm.score(cfg, &tree, &norm_greedy_episode(cfg, &tree, norm)?);
        copy += norm.score(cfg, &tree, &norm_greedy_episode(cfg, &tree, &proposed)?);
    }
    let incumbent_score = inc / rollouts as f64;
    let copy_score = copy / rollouts as f64;
    let adopted = copy_score > incumbent_score;

    // judgment at t = 0 under the incumbent norm; the edit lands at t = 1
    let mut rec = TraceRecorder::new(sandbox_state(norm)?)?;
    rec.tick(vec![], vec![])?;
    if adopted {
        rec.tick_judged(
            vec![proposed.fingerprint(2)],
            LocalOperation::norm_revision(2).with_tag("sandbox-adopt"),
            0,
        )?;
    } else {
        rec.tick(vec![], vec![])?;
    }
    let trace = rec.finish()?;
    let record = SandboxRecord {
        current: norm.clone(),
        delta: delta.clone(),
        proposed,
        rollouts,
        seed,
        incumbent_score,
        copy_score,
        adopted,
        regime: classify_regime(&trace)?.regime,
        closure_passed: check_causal_closure(&trace)?.passed,
    };
    Ok((record, trace))
}

/// Every edit moving each weight by `{0, ±0.25, ±0.5}` of its magnitude.
pub fn conservatism_grid(norm: &NormVector) -> Vec<NormVector> {
    const STEPS: [f64; 5] = [-0.5, -0.25, 0.0, 0.25, 0.5];
    let mut out = vec![Vec::new()];
    for w in &norm.weights {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                STEPS.iter().map(move |k| {
                    let mut p = prefix.clone();
                    p.push(k * w.abs());
                    p
                })
            })
            .collect();
    }
    out.into_iter().map(|weights| NormVector { weights }).collect()
}

pub fn run_conservatism_grid(
    cfg: &TreeConfig,
    norm: &NormVector,
    rollouts: usize,
    seed: u64,
) -> Result<Vec<(SandboxRecord, Trace)>> {
    conservatism_grid(norm)
        .par_iter()
        .map(|d| sandbox_revision(cfg, norm, d, rollouts, seed))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> NormVector {
        NormVector::new(1.0, 1.0).unwrap()
    }

    #[test]
    fn expected_max_matches_quadrature() {
        for &(u, s) in &[(-3.0, 2.0), (-1.0, 2.0), (0.5, 2.0), (2.5, 2.0), (0.0, 1.0)] {
            let n = 200_000;
            let mut acc = 0.0;
            for k in 0..n {
                let x = -s + 2.0 * s * (k as f64 + 0.5) / n as f64;
                acc += f64::max(u, x);
            }
            assert!((expected_max_uniform(u, s) - acc / n as f64).abs() < 1e-6, "u={u} s={s}");
        }
    }

    #[test]
    fn unit_norm_score_is_the_episode_payoff() {
        let cfg = TreeConfig::default();
        for i in 0..20 {
            let tree = sandbox_tree(&cfg, 4, i);
            let log = norm_greedy_episode(&cfg, &tree, &unit()).unwrap();
            assert!((unit().score(&cfg, &tree, &log) - log.payoff).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_edit_ties_and_is_rejected() {
        let cfg = TreeConfig::default();
        let (r, trace) = sandbox_revision(&cfg, &unit(), &NormVector::new(0.0, 0.0).unwrap(), 50, 1).unwrap();
        assert_eq!(r.incumbent_score, r.copy_score);
        assert!(!r.adopted);
        assert_eq!(r.regime, Regime::Fixed);
        assert!(trace.events.is_empty());
    }

    #[test]
    fn uniform_rescaling_changes_nothing() {
        let cfg = TreeConfig::default();
        let (r, _) = sandbox_revision(&cfg, &unit(), &NormVector::new(0.1, 0.1).unwrap(), 50, 2).unwrap();
        assert_eq!(r.incumbent_score, r.copy_score);
        assert!(!r.adopted);
    }

    #[test]
    fn prohibitive_cost_weight_stops_inspection_and_is_rejected() {
        let cfg = TreeConfig::default();
        let tree = sandbox_tree(&cfg, 3, 0);
        let heavy = NormVector::new(1.0, 50.0).unwrap();
        assert_eq!(norm_greedy_episode(&cfg, &tree, &heavy).unwrap().inspection_count(), 0);
        let (r, _) = sandbox_revision(&cfg, &unit(), &NormVector::new(0.0, 49.0).unwrap(), 100, 3).unwrap();
        assert!(r.incumbent_score > r.copy_score);
        assert!(!r.adopted);
    }

    #[test]
    fn adopted_edits_are_reflexive_and_closed() {
        let cfg = TreeConfig::default();
        let runs = run_conservatism_grid(&cfg, &unit(), 60, 9).unwrap();
        assert_eq!(runs.len(), 25);
        for (r, trace) in &runs {
            assert!(r.closure_passed);
            if r.adopted {
                assert!(r.copy_score > r.incumbent_score);
                assert_eq!(r.regime, Regime::Reflexive);
                assert_eq!(trace.events.len(), 1);
            } else {
                assert!(r.copy_score <= r.incumbent_score);
            }
        }
    }

    #[test]
    fn zero_rollouts_is_an_error() {
        let cfg = TreeConfig::default();
        assert!(sandbox_revision(&cfg, &unit(), &unit(), 0, 0).is_err());
    }
}
