use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::policy::RecurrentPolicy;
use super::rollout::{rollout, Rollout, Sampling};
use super::train::{batch_gradient, surrogate_value};
use crate::error::{Error, Result};
use crate::planning::{generate_tree, Structure, TreeConfig};
use crate::rng::{derive_seed, seeded};

/// Gradients smaller than this are compared in absolute rather than relative terms.
pub const RELATIVE_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub max_absolute_error: f64,
    pub coordinates: usize,
}

/// Batch-mean surrogate recomputed from the recorded inputs of each rollout.
pub fn batch_surrogate(
    policy: &RecurrentPolicy,
    rollouts: &[Rollout],
    advantages: &[Vec<f64>],
    beta: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for (ro, adv) in rollouts.iter().zip(advantages) {
        let mut h = vec![0.0; policy.hidden_dim()];
        let mut probs = Vec::with_capacity(ro.caches.len());
        for c in &ro.caches {
            let (p, h_new) = policy.forward(&h, &c.x, &c.mask)?;
            probs.push(p);
            h = h_new;
        }
        total += surrogate_value(&probs, &ro.actions, adv, beta);
    }
    Ok(total / rollouts.len() as f64)
}

/// Recorded rollouts on mixed trees, with advantages centred on the batch mean return.
pub fn sample_batch(
    policy: &RecurrentPolicy,
    tree_cfg: &TreeConfig,
    episodes: usize,
    seed: u64,
) -> Result<(Vec<Rollout>, Vec<Vec<f64>>)> {
    let mut rng = seeded(seed, &[0x6C4]);
    let mut rollouts = Vec::with_capacity(episodes);
    for i in 0..episodes {
        let s = if i % 2 == 0 {
            Structure::FarSighted
        } else {
            Structure::NearSighted
        };
        let tree = generate_tree(tree_cfg, s, derive_seed(seed, &[0x6C5, i as u64]));
        rollouts.push(rollout(policy, tree_cfg, &tree, &mut rng, Sampling::Stochastic, true, None)?);
    }
    let returns: Vec<Vec<f64>> = rollouts.iter().map(Rollout::returns).collect();
    let all: Vec<f64> = returns.iter().flatten().copied().collect();
    let mean = all.iter().sum::<f64>() / all.len().max(1) as f64;
    let adv = returns
        .iter()
        .map(|g| g.iter().map(|v| v - mean).collect())
        .collect();
    Ok((rollouts, adv))
}

/// Analytic BPTT gradient against central finite differences on a random coordinate subsample.
///
/// `step` around 1e-3 balances truncation against rounding for this stencil.
pub fn gradient_check(
    policy: &RecurrentPolicy,
    rollouts: &[Rollout],
    advantages: &[Vec<f64>],
    beta: f64,
    coordinates: usize,
    step: f64,
    seed: u64,
) -> Result<GradCheckReport> {
    if rollouts.is_empty() || rollouts.iter().all(|r| r.caches.is_empty()) {
        return Err(Error::InvalidInput("gradient check needs at least one recorded step".into()));
    }
    if rollouts.len() != advantages.len() {
        return Err(Error::InvalidInput("one advantage sequence per rollout required".into()));
    }
    let analytic = batch_gradient(policy, rollouts, advantages, beta);
    let n = policy.params.len();
    let k = coordinates.min(n);
    let mut rng = seeded(seed, &[0x6C6]);
    let mut idx: Vec<usize> = sample(&mut rng, n, k).into_vec();
    idx.sort_unstable();
    let mut probe = policy.clone();
    let (mut max_rel, mut max_abs) = (0.0_f64, 0.0_f64);
    for i in idx {
        let orig = probe.params[i];
        let mut at = |k: f64| -> Result<f64> {
            probe.params[i] = orig + k * step;
            batch_surrogate(&probe, rollouts, advantages, beta)
        };
        // five-point central stencil, truncation error O(step^4)
        let numeric = (8.0 * (at(1.0)? - at(-1.0)?) - (at(2.0)? - at(-2.0)?)) / (12.0 * step);
        probe.params[i] = orig;
        let diff = (numeric - analytic[i]).abs();
        let scale = numeric.abs().max(analytic[i].abs()).max(RELATIVE_FLOOR);
        max_abs = max_abs.max(diff);
        max_rel = max_rel.max(diff / scale);
    }
    Ok(GradCheckReport {
        max_relative_error: max_rel,
        max_absolute_error: max_abs,
        coordinates: k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::{action_dim, observation_dim};

    fn small(seed: u64) -> (RecurrentPolicy, TreeConfig) {
        let cfg = TreeConfig::default();
        let mut p = RecurrentPolicy::init(observation_dim(&cfg), 6, action_dim(&cfg), seed);
        // larger readout so the check exercises non-uniform distributions
        let r = p.layout.range(super::super::policy::Block::Wo);
        p.params[r].iter_mut().for_each(|v| *v *= 10.0);
        (p, cfg)
    }

    #[test]
    fn analytic_matches_finite_differences() {
        let (p, cfg) = small(3);
        let (ro, adv) = sample_batch(&p, &cfg, 4, 3).unwrap();
        let rep = gradient_check(&p, &ro, &adv, 0.01, 60, 1e-3, 3).unwrap();
        assert!(rep.max_relative_error < 1e-4, "{rep:?}");
        assert_eq!(rep.coordinates, 60);
    }

    #[test]
    fn empty_batch_is_an_error() {
        let (p, _) = small(0);
        assert!(gradient_check(&p, &[], &[], 0.0, 50, 1e-5, 0).is_err());
    }

    #[test]
    fn finite_difference_error_is_fourth_order() {
        let (p, cfg) = small(5);
        let (ro, adv) = sample_batch(&p, &cfg, 2, 5).unwrap();
        let a = gradient_check(&p, &ro, &adv, 0.01, 50, 2e-2, 1).unwrap();
        let b = gradient_check(&p, &ro, &adv, 0.01, 50, 4e-2, 1).unwrap();
        let ratio = b.max_absolute_error / a.max_absolute_error;
        assert!((10.0..24.0).contains(&ratio), "ratio {ratio}");
    }
}
