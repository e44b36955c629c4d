use rand::Rng as _;

use super::episode::{Action, Episode, EpisodeLog};
use super::strategy::Strategy;
use super::tree::{generate_tree, PlanningTree, Structure, TreeConfig};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Rng};

/// Inspects every node at `depth` in id order, then commits.
pub fn play_inspect_depth(cfg: &TreeConfig, tree: &PlanningTree, depth: usize) -> Result<EpisodeLog> {
    let mut ep = Episode::new(cfg, tree);
    for node in cfg.nodes_at_depth(depth) {
        ep.step(Action::Inspect(node))?;
    }
    ep.step(Action::Commit)?;
    Ok(ep.into_log())
}

/// Inspect all deepest-level nodes, commit the best revealed path.
pub fn play_far(cfg: &TreeConfig, tree: &PlanningTree) -> Result<EpisodeLog> {
    play_inspect_depth(cfg, tree, cfg.depth)
}

/// Inspect all depth-1 nodes, commit greedily.
pub fn play_near(cfg: &TreeConfig, tree: &PlanningTree) -> Result<EpisodeLog> {
    play_inspect_depth(cfg, tree, 1)
}

pub fn play_strategy(cfg: &TreeConfig, tree: &PlanningTree, s: Strategy) -> Result<EpisodeLog> {
    match s {
        Strategy::NearSighted => play_near(cfg, tree),
        _ => play_far(cfg, tree),
    }
}

/// Uniformly random legal action at every step.
pub fn play_random(cfg: &TreeConfig, tree: &PlanningTree, rng: &mut Rng) -> Result<EpisodeLog> {
    let mut ep = Episode::new(cfg, tree);
    while !ep.is_done() {
        let legal: Vec<usize> = ep
            .legal_mask()
            .iter()
            .enumerate()
            .filter(|(_, &ok)| ok)
            .map(|(i, _)| i)
            .collect();
        let i = legal[rng.gen_range(0..legal.len())];
        ep.step(Action::from_index(i, cfg)?)?;
    }
    Ok(ep.into_log())
}

/// Closed-form mean payoff of the scripted policy that inspects one full depth level.
///
/// With uniform rewards on `[-s, s]`, the best of `m` revealed siblings has mean
/// `s (m - 1) / (m + 1)`; unrevealed nodes on the chosen path contribute zero.
pub fn scripted_mean_payoff(cfg: &TreeConfig, structure: Structure, strategy: Strategy) -> f64 {
    let depth = match strategy {
        Strategy::NearSighted => 1,
        _ => cfg.depth,
    };
    let m = cfg.branching.pow(depth as u32) as f64;
    let s = cfg.scales_for(structure)[depth - 1];
    s * (m - 1.0) / (m + 1.0) - cfg.cost * m
}

/// The scripted strategy with the higher mean payoff; ties go to far-sighted.
pub fn optimal_strategy(cfg: &TreeConfig, structure: Structure) -> (Strategy, f64) {
    let far = scripted_mean_payoff(cfg, structure, Strategy::FarSighted);
    let near = scripted_mean_payoff(cfg, structure, Strategy::NearSighted);
    if near > far + 1e-12 {
        (Strategy::NearSighted, near)
    } else {
        (Strategy::FarSighted, far)
    }
}

/// Monte-Carlo mean payoff difference, scripted far-sighted minus near-sighted, on shared trees.
pub fn optimal_strategy_payoff_gap(
    cfg: &TreeConfig,
    structure: Structure,
    n: usize,
    seed: u64,
) -> Result<f64> {
    if n < 100 {
        return Err(Error::InvalidInput(format!("need at least 100 trees, got {n}")));
    }
    let mut total = 0.0;
    for i in 0..n as u64 {
        let tree = generate_tree(cfg, structure, derive_seed(seed, &[0x6A9, i]));
        total += play_far(cfg, &tree)?.payoff - play_near(cfg, &tree)?.payoff;
    }
    Ok(total / n as f64)
}

/// Monte-Carlo mean payoff of the uniformly random policy.
pub fn random_policy_payoff(cfg: &TreeConfig, structure: Structure, n: usize, seed: u64) -> Result<f64> {
    let mut rng = crate::rng::seeded(seed, &[0x4A4D]);
    let mut total = 0.0;
    for i in 0..n as u64 {
        let tree = generate_tree(cfg, structure, derive_seed(seed, &[0x6A9, i]));
        total += play_random(cfg, &tree, &mut rng)?.payoff;
    }
    Ok(total / n.max(1) as f64)
}
