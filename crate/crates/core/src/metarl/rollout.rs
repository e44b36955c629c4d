use rand::Rng as _;

use super::policy::{RecurrentPolicy, StepCache};
use crate::error::Result;
use crate::planning::{generate_tree, play_random, Action, Episode, EpisodeLog, PlanningTree, Structure, TreeConfig};
use crate::rng::{derive_seed, seeded, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    Stochastic,
    Greedy,
}

/// Called after each recurrent update and before the readout:
/// `(decision index, whether an inspection is still possible, hidden state)`.
pub type HiddenHook<'h> = dyn FnMut(usize, bool, &mut [f64]) + 'h;

#[derive(Debug, Clone)]
pub struct Rollout {
    pub log: EpisodeLog,
    pub actions: Vec<usize>,
    pub rewards: Vec<f64>,
    /// Hidden state used for each decision (after any hook).
    pub hidden: Vec<Vec<f64>>,
    pub entropies: Vec<f64>,
    /// Present only when the rollout was recorded for training.
    pub caches: Vec<StepCache>,
}

impl Rollout {
    /// Undiscounted reward-to-go at each decision.
    pub fn returns(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.rewards.len()];
        let mut acc = 0.0;
        for t in (0..self.rewards.len()).rev() {
            acc += self.rewards[t];
            g[t] = acc;
        }
        g
    }
}

fn sample(probs: &[f64], rng: &mut Rng, mode: Sampling) -> usize {
    match mode {
        Sampling::Greedy => {
            let mut best = 0;
            for (i, p) in probs.iter().enumerate() {
                if *p > probs[best] {
                    best = i;
                }
            }
            best
        }
        Sampling::Stochastic => {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut last = 0;
            for (i, p) in probs.iter().enumerate() {
                if *p > 0.0 {
                    acc += p;
                    last = i;
                    if u < acc {
                        return i;
                    }
                }
            }
            last
        }
    }
}

/// Plays one episode; hidden state starts at zero.
pub fn rollout(
    policy: &RecurrentPolicy,
    cfg: &TreeConfig,
    tree: &PlanningTree,
    rng: &mut Rng,
    mode: Sampling,
    record: bool,
    mut hook: Option<&mut HiddenHook<'_>>,
) -> Result<Rollout> {
    let mut ep = Episode::new(cfg, tree);
    let mut h = vec![0.0; policy.hidden_dim()];
    let mut x = ep.observation();
    let mut out = Rollout {
        log: ep.clone().into_log(),
        actions: Vec::new(),
        rewards: Vec::new(),
        hidden: Vec::new(),
        entropies: Vec::new(),
        caches: Vec::new(),
    };
    let mut t = 0;
    while !ep.is_done() {
        let mask = ep.legal_mask();
        let probs = if record {
            let cache = policy.forward_cached(&h, &x, &mask)?;
            h.clone_from(&cache.h);
            let p = cache.probs.clone();
            out.caches.push(cache);
            p
        } else {
            let (_, _, _, mut h_new) = policy.cell(&h, &x)?;
            if let Some(f) = hook.as_deref_mut() {
                let can_inspect = mask[..mask.len() - 1].iter().any(|&m| m);
                f(t, can_inspect, &mut h_new);
            }
            h = h_new;
            policy.readout(&h, &mask)?
        };
        let a = sample(&probs, rng, mode);
        out.entropies.push(super::policy::entropy(&probs));
        out.hidden.push(h.clone());
        let step = ep.step(Action::from_index(a, cfg)?)?;
        out.actions.push(a);
        out.rewards.push(step.reward);
        x = step.observation;
        t += 1;
    }
    out.log = ep.into_log();
    Ok(out)
}

/// Tree `i` of the held-out evaluation stream, disjoint from the training trees.
pub fn held_out_tree(cfg: &TreeConfig, structure: Structure, seed: u64, i: u64) -> PlanningTree {
    generate_tree(cfg, structure, derive_seed(seed, &[0xE7A, structure as u64, i]))
}

/// Mean payoff over the first `n` held-out trees of one structure.
pub fn evaluate_policy(
    policy: &RecurrentPolicy,
    cfg: &TreeConfig,
    structure: Structure,
    n: usize,
    seed: u64,
    mode: Sampling,
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..n as u64 {
        let tree = held_out_tree(cfg, structure, seed, i);
        let mut rng = seeded(seed, &[0xE7B, structure as u64, i]);
        total += rollout(policy, cfg, &tree, &mut rng, mode, false, None)?.log.payoff;
    }
    Ok(total / n.max(1) as f64)
}

/// Mean payoff of the uniformly random policy on the same held-out trees.
pub fn evaluate_random(cfg: &TreeConfig, structure: Structure, n: usize, seed: u64) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..n as u64 {
        let tree = held_out_tree(cfg, structure, seed, i);
        let mut rng = seeded(seed, &[0xE7C, structure as u64, i]);
        total += play_random(cfg, &tree, &mut rng)?.payoff;
    }
    Ok(total / n.max(1) as f64)
}
