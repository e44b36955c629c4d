use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::policy::RecurrentPolicy;
use super::rollout::{rollout, Rollout, Sampling};
use crate::error::{Error, Result};
use crate::hierarchy::{FunctionalState, LocalOperation, RuleFingerprint, Trace, TraceRecorder};
use crate::planning::{action_dim, generate_tree, observation_dim, Structure, TreeConfig};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub hidden_dim: usize,
    pub episodes_per_update: usize,
    pub learning_rate: f64,
    /// Learning rate at the last update as a fraction of `learning_rate`; linear in between.
    pub final_lr_fraction: f64,
    pub baseline_decay: f64,
    pub entropy_bonus: f64,
    pub max_updates: usize,
    /// Global gradient-norm clip applied before the Adam step.
    pub grad_clip: f64,
    /// Keep a separate baseline per sampled structure (known to the trainer, hidden from the agent).
    pub structure_baseline: bool,
    /// Rollouts sharing one tree in a batch. Above 1, each rollout's baseline
    /// is the leave-one-out mean return of its siblings on the same tree.
    pub rollouts_per_tree: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 32,
            episodes_per_update: 64,
            learning_rate: 3e-3,
            final_lr_fraction: 0.1,
            baseline_decay: 0.99,
            entropy_bonus: 0.001,
            max_updates: 16_000,
            grad_clip: 5.0,
            structure_baseline: true,
            rollouts_per_tree: 8,
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("training: {what}")));
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be >= 1");
        }
        if self.episodes_per_update == 0 {
            return bad("episodes_per_update must be >= 1");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be finite and >= 0");
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return bad("baseline_decay must lie in [0, 1)");
        }
        if !(self.entropy_bonus >= 0.0 && self.entropy_bonus.is_finite()) {
            return bad("entropy_bonus must be finite and >= 0");
        }
        if !(0.0..=1.0).contains(&self.final_lr_fraction) {
            return bad("final_lr_fraction must be in [0, 1]");
        }
        if !(self.grad_clip > 0.0) {
            return bad("grad_clip must be > 0");
        }
        if self.rollouts_per_tree == 0 || self.episodes_per_update % self.rollouts_per_tree != 0 {
            return bad("rollouts_per_tree must be >= 1 and divide episodes_per_update");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub update: usize,
    pub mean_payoff: f64,
    pub entropy: f64,
}

pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in curve {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-decision-index moving average of the reward-to-go.
#[derive(Debug, Clone, Default)]
pub struct Baseline {
    values: Vec<Option<f64>>,
}

impl Baseline {
    pub fn get(&self, t: usize) -> f64 {
        self.values.get(t).copied().flatten().unwrap_or(0.0)
    }

    pub fn update(&mut self, batch_returns: &[Vec<f64>], decay: f64) {
        let len = batch_returns.iter().map(Vec::len).max().unwrap_or(0);
        if self.values.len() < len {
            self.values.resize(len, None);
        }
        for t in 0..len {
            let at_t: Vec<f64> = batch_returns.iter().filter_map(|g| g.get(t).copied()).collect();
            let m = at_t.iter().sum::<f64>() / at_t.len() as f64;
            self.values[t] = Some(match self.values[t] {
                None => m,
                Some(b) => decay * b + (1.0 - decay) * m,
            });
        }
    }
}

/// Adam optimizer state.
#[derive(Debug, Clone)]
pub struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let b1t = 1.0 - self.beta1.powi(self.t as i32);
        let b2t = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / b1t;
            let vh = self.v[i] / b2t;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Logit gradient of `−A log π(a) − β H(π)` at one decision.
pub fn surrogate_dlogits(probs: &[f64], mask: &[bool], action: usize, adv: f64, beta: f64) -> Vec<f64> {
    let h = super::policy::entropy(probs);
    probs
        .iter()
        .zip(mask)
        .enumerate()
        .map(|(j, (&p, &m))| {
            if !m {
                return 0.0;
            }
            let onehot = if j == action { 1.0 } else { 0.0 };
            let logp = if p > 0.0 { p.ln() } else { 0.0 };
            -adv * (onehot - p) + beta * p * (logp + h)
        })
        .collect()
}

/// Value of `Σ_t [−A_t log π(a_t) − β H(π_t)]` for one recorded episode.
pub fn surrogate_value(probs: &[Vec<f64>], actions: &[usize], advantages: &[f64], beta: f64) -> f64 {
    probs
        .iter()
        .zip(actions)
        .zip(advantages)
        .map(|((p, &a), &adv)| -adv * p[a].ln() - beta * super::policy::entropy(p))
        .sum()
}

/// Gradient of the batch-mean surrogate over recorded rollouts.
pub fn batch_gradient(
    policy: &RecurrentPolicy,
    rollouts: &[Rollout],
    advantages: &[Vec<f64>],
    beta: f64,
) -> Vec<f64> {
    let grads: Vec<Vec<f64>> = rollouts
        .par_iter()
        .zip(advantages.par_iter())
        .map(|(ro, adv)| {
            let dl: Vec<Vec<f64>> = ro
                .caches
                .iter()
                .zip(&ro.actions)
                .zip(adv)
                .map(|((c, &a), &av)| surrogate_dlogits(&c.probs, &c.mask, a, av, beta))
                .collect();
            let mut g = vec![0.0; policy.params.len()];
            policy.backward(&ro.caches, &dl, &mut g);
            g
        })
        .collect();
    let mut total = vec![0.0; policy.params.len()];
    for g in &grads {
        for (t, v) in total.iter_mut().zip(g) {
            *t += v;
        }
    }
    let n = rollouts.len().max(1) as f64;
    total.iter_mut().for_each(|v| *v /= n);
    total
}

/// Structure of episode `i` in a batch: alternating, so each batch is balanced.
pub fn training_structure(i: usize) -> Structure {
    if i % 2 == 0 {
        Structure::FarSighted
    } else {
        Structure::NearSighted
    }
}

pub fn new_policy(tree_cfg: &TreeConfig, cfg: &TrainingConfig) -> RecurrentPolicy {
    RecurrentPolicy::init(
        observation_dim(tree_cfg),
        cfg.hidden_dim,
        action_dim(tree_cfg),
        derive_seed(cfg.seed, &[0x1417]),
    )
}

pub fn meta_rl_hierarchy(policy: &RecurrentPolicy, strategy: &str) -> Result<FunctionalState> {
    FunctionalState::new(
        0,
        vec![
            policy.fingerprint(0),
            RuleFingerprint::symbolic(1, &format!("strategy:{strategy}")),
            RuleFingerprint::symbolic(2, &format!("gated-recurrent-cell:{}", policy.hidden_dim())),
            RuleFingerprint::symbolic(3, "maximize-expected-payoff"),
        ],
        vec![true, true, true, false],
        vec![true, true, true, false],
    )
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: RecurrentPolicy,
    pub curve: Vec<CurvePoint>,
    pub trace: Trace,
}

/// Episodic REINFORCE with a per-step moving-average baseline and entropy bonus.
pub fn train(
    mut policy: RecurrentPolicy,
    cfg: &TrainingConfig,
    tree_cfg: &TreeConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    tree_cfg.validate()?;
    let mut adam = Adam::new(policy.params.len(), cfg.learning_rate);
    let mut baselines = [Baseline::default(), Baseline::default()];
    let group = cfg.rollouts_per_tree;
    let slot = |i: usize| if cfg.structure_baseline { (i / group) % 2 } else { 0 };
    let mut curve = Vec::with_capacity(cfg.max_updates);
    let mut rec = TraceRecorder::new(meta_rl_hierarchy(&policy, "untrained")?)?;

    for update in 0..cfg.max_updates {
        let rollouts: Vec<Rollout> = (0..cfg.episodes_per_update)
            .into_par_iter()
            .map(|i| {
                let g = i / group;
                let tree = generate_tree(
                    tree_cfg,
                    training_structure(g),
                    derive_seed(cfg.seed, &[0x7A1, update as u64, g as u64]),
                );
                let mut rng = seeded(cfg.seed, &[0x7A2, update as u64, i as u64]);
                rollout(&policy, tree_cfg, &tree, &mut rng, Sampling::Stochastic, true, None)
            })
            .collect::<Result<_>>()?;

        let returns: Vec<Vec<f64>> = rollouts.iter().map(Rollout::returns).collect();
        let advantages: Vec<Vec<f64>> = if group > 1 {
            leave_one_out_advantages(&rollouts, &returns, group)
        } else {
            returns
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let b = &baselines[slot(i)];
                    g.iter().enumerate().map(|(t, v)| v - b.get(t)).collect()
                })
                .collect()
        };
        for (k, b) in baselines.iter_mut().enumerate() {
            let group: Vec<Vec<f64>> = returns
                .iter()
                .enumerate()
                .filter(|(i, _)| slot(*i) == k)
                .map(|(_, g)| g.clone())
                .collect();
            if !group.is_empty() {
                b.update(&group, cfg.baseline_decay);
            }
        }

        let n = rollouts.len() as f64;
        let mean_payoff = rollouts.iter().map(|r| r.log.payoff).sum::<f64>() / n;
        let steps: usize = rollouts.iter().map(|r| r.entropies.len()).sum();
        let entropy =
            rollouts.iter().flat_map(|r| r.entropies.iter()).sum::<f64>() / steps.max(1) as f64;
        if !mean_payoff.is_finite() {
            return Err(Error::Divergence {
                update,
                reason: format!("mean payoff {mean_payoff}"),
            });
        }
        curve.push(CurvePoint {
            update,
            mean_payoff,
            entropy,
        });

        let mut grad = batch_gradient(&policy, &rollouts, &advantages, cfg.entropy_bonus);
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !norm.is_finite() {
            return Err(Error::Divergence {
                update,
                reason: format!("gradient norm {norm}"),
            });
        }
        if norm > cfg.grad_clip {
            let k = cfg.grad_clip / norm;
            grad.iter_mut().for_each(|g| *g *= k);
        }
        let progress = update as f64 / (cfg.max_updates.max(2) - 1) as f64;
        adam.lr = cfg.learning_rate * (1.0 - progress * (1.0 - cfg.final_lr_fraction));
        adam.step(&mut policy.params, &grad);
        let pn = policy.param_norm();
        if !pn.is_finite() || pn > 1e4 {
            return Err(Error::Divergence {
                update,
                reason: format!("parameter norm {pn:.3e}"),
            });
        }
        rec.tick(
            vec![policy.fingerprint(0)],
            vec![(LocalOperation::new(0, 3), false)],
        )?;
    }
    Ok(TrainOutcome {
        policy,
        curve,
        trace: rec.finish()?,
    })
}

/// Advantages against siblings on the same tree: at step `t` the baseline is
/// the siblings' mean total return less the reward this rollout already banked.
fn leave_one_out_advantages(rollouts: &[Rollout], returns: &[Vec<f64>], group: usize) -> Vec<Vec<f64>> {
    let totals: Vec<f64> = returns.iter().map(|g| g.first().copied().unwrap_or(0.0)).collect();
    (0..rollouts.len())
        .map(|i| {
            let start = i / group * group;
            let others: f64 = (start..start + group).filter(|&j| j != i).map(|j| totals[j]).sum();
            let loo = others / (group - 1) as f64;
            let mut banked = 0.0;
            returns[i]
                .iter()
                .zip(&rollouts[i].rewards)
                .map(|(g, r)| {
                    let a = g - (loo - banked);
                    banked += r;
                    a
                })
                .collect()
        })
        .collect()
}

/// Trailing moving average of the learning curve.
pub fn moving_average(curve: &[CurvePoint], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(curve.len());
    let mut acc = 0.0;
    for (i, p) in curve.iter().enumerate() {
        acc += p.mean_payoff;
        if i >= w {
            acc -= curve[i - w].mean_payoff;
        }
        out.push(acc / (i + 1).min(w) as f64);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::{classify_regime, Regime};

    #[test]
    fn zero_rates_leave_parameters_untouched() {
        let tree_cfg = TreeConfig::default();
        let cfg = TrainingConfig {
            hidden_dim: 4,
            learning_rate: 0.0,
            entropy_bonus: 0.0,
            max_updates: 3,
            episodes_per_update: 4,
            rollouts_per_tree: 2,
            ..TrainingConfig::default()
        };
        let p0 = new_policy(&tree_cfg, &cfg);
        let out = train(p0.clone(), &cfg, &tree_cfg).unwrap();
        assert_eq!(out.policy.params, p0.params);
        assert_eq!(out.curve.len(), 3);
    }

    #[test]
    fn training_trace_is_local() {
        let tree_cfg = TreeConfig::default();
        let cfg = TrainingConfig {
            hidden_dim: 4,
            max_updates: 3,
            episodes_per_update: 4,
            rollouts_per_tree: 2,
            ..TrainingConfig::default()
        };
        let out = train(new_policy(&tree_cfg, &cfg), &cfg, &tree_cfg).unwrap();
        assert_eq!(classify_regime(&out.trace).unwrap().regime, Regime::Local);
    }

    #[test]
    fn config_validation() {
        let cfg = TrainingConfig {
            baseline_decay: 1.0,
            ..TrainingConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn leave_one_out_advantages_are_paired() {
        let tree_cfg = TreeConfig::default();
        let policy = RecurrentPolicy::init(observation_dim(&tree_cfg), 4, action_dim(&tree_cfg), 2);
        let tree = generate_tree(&tree_cfg, Structure::NearSighted, 5);
        let mut rng = seeded(1, &[]);
        let ros: Vec<Rollout> = (0..2)
            .map(|_| rollout(&policy, &tree_cfg, &tree, &mut rng, Sampling::Stochastic, true, None).unwrap())
            .collect();
        let returns: Vec<Vec<f64>> = ros.iter().map(Rollout::returns).collect();
        let adv = leave_one_out_advantages(&ros, &returns, 2);
        // at t = 0 each rollout is judged against the other's total
        assert!((adv[0][0] + adv[1][0]).abs() < 1e-12);
        assert!((adv[0][0] - (returns[0][0] - returns[1][0])).abs() < 1e-12);
        // later steps: reward-to-go minus (sibling total - banked reward), i.e. total minus sibling total
        for (t, a) in adv[0].iter().enumerate() {
            assert!((a - (returns[0][0] - returns[1][0])).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn baseline_tracks_returns() {
        let mut b = Baseline::default();
        b.update(&[vec![2.0, 1.0], vec![4.0]], 0.5);
        assert_eq!((b.get(0), b.get(1), b.get(5)), (3.0, 1.0, 0.0));
        b.update(&[vec![5.0]], 0.5);
        assert_eq!(b.get(0), 4.0);
    }
}
