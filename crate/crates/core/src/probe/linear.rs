use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planning::Strategy;
use crate::rng::seeded;

/// One hidden state taken at a decision point, labelled by its episode's strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub episode: usize,
    pub step: usize,
    pub hidden: Vec<f64>,
    pub label: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub learning_rate: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub l2: f64,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            max_iterations: 5000,
            tolerance: 1e-8,
            l2: 1e-4,
            holdout_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Unit-norm linear read-out of the far/near strategy; positive side is far-sighted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProbe {
    pub weight: Vec<f64>,
    pub bias: f64,
    /// Mean of `w·h` over far-sighted and near-sighted training samples.
    pub class_means: ClassMeans,
    pub train_accuracy: f64,
    pub holdout_accuracy: f64,
    pub train_seed: u64,
    pub converged: bool,
    pub final_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMeans {
    pub far_sighted: f64,
    pub near_sighted: f64,
}

impl ClassMeans {
    pub fn of(&self, s: Strategy) -> Option<f64> {
        match s {
            Strategy::FarSighted => Some(self.far_sighted),
            Strategy::NearSighted => Some(self.near_sighted),
            Strategy::Unclassified => None,
        }
    }
}

fn target(s: Strategy) -> Option<f64> {
    match s {
        Strategy::FarSighted => Some(1.0),
        Strategy::NearSighted => Some(0.0),
        Strategy::Unclassified => None,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LinearProbe {
    pub fn projection(&self, h: &[f64]) -> f64 {
        dot(&self.weight, h)
    }

    pub fn predict(&self, h: &[f64]) -> Strategy {
        if self.projection(h) + self.bias >= 0.0 {
            Strategy::FarSighted
        } else {
            Strategy::NearSighted
        }
    }

    pub fn accuracy(&self, samples: &[ProbeSample]) -> f64 {
        if samples.is_empty() {
            return f64::NAN;
        }
        let hits = samples
            .iter()
            .filter(|s| self.predict(&s.hidden) == s.label)
            .count();
        hits as f64 / samples.len() as f64
    }
}

/// Splits by episode id: every sample of an episode lands on the same side.
pub fn split_by_episode(
    samples: &[ProbeSample],
    holdout_fraction: f64,
    seed: u64,
) -> (Vec<ProbeSample>, Vec<ProbeSample>) {
    let episodes: BTreeSet<usize> = samples.iter().map(|s| s.episode).collect();
    let mut ids: Vec<usize> = episodes.into_iter().collect();
    ids.shuffle(&mut seeded(seed, &[0x9B0]));
    let k = ((ids.len() as f64) * holdout_fraction).round() as usize;
    let k = k.clamp(usize::from(ids.len() > 1), ids.len().saturating_sub(1));
    let held: BTreeSet<usize> = ids[..k].iter().copied().collect();
    samples
        .iter()
        .cloned()
        .partition(|s| !held.contains(&s.episode))
}

/// Rejects splits in which an episode contributes to both sides.
pub fn check_disjoint(train: &[ProbeSample], holdout: &[ProbeSample]) -> Result<()> {
    let a: BTreeSet<usize> = train.iter().map(|s| s.episode).collect();
    if let Some(s) = holdout.iter().find(|s| a.contains(&s.episode)) {
        return Err(Error::InvalidInput(format!(
            "probe split leaks episode {} into both train and holdout",
            s.episode
        )));
    }
    Ok(())
}

/// Full-batch logistic regression by gradient descent, then weight normalization.
pub fn train_probe(
    train: &[ProbeSample],
    holdout: &[ProbeSample],
    cfg: &ProbeConfig,
) -> Result<LinearProbe> {
    check_disjoint(train, holdout)?;
    let data: Vec<(&[f64], f64)> = train
        .iter()
        .filter_map(|s| target(s.label).map(|y| (s.hidden.as_slice(), y)))
        .collect();
    let pos = data.iter().filter(|(_, y)| *y == 1.0).count();
    if pos == 0 || pos == data.len() {
        return Err(Error::InvalidInput(
            "probe training data must contain both strategy classes".into(),
        ));
    }
    let dim = data[0].0.len();
    let n = data.len() as f64;
    let mut v = vec![0.0; dim];
    let mut b = 0.0;
    let mut prev = f64::INFINITY;
    let mut loss = prev;
    let mut converged = false;
    for _ in 0..cfg.max_iterations {
        let mut gv = vec![0.0; dim];
        let mut gb = 0.0;
        loss = 0.0;
        for (h, y) in &data {
            let z = dot(&v, h) + b;
            let p = 1.0 / (1.0 + (-z).exp());
            loss += if z > 0.0 {
                z + (-z).exp().ln_1p() - y * z
            } else {
                z.exp().ln_1p() - y * z
            };
            let r = p - y;
            for (g, x) in gv.iter_mut().zip(h.iter()) {
                *g += r * x;
            }
            gb += r;
        }
        loss = loss / n + 0.5 * cfg.l2 * dot(&v, &v);
        if (prev - loss).abs() < cfg.tolerance {
            converged = true;
            break;
        }
        prev = loss;
        for (vi, g) in v.iter_mut().zip(&gv) {
            *vi -= cfg.learning_rate * (g / n + cfg.l2 * *vi);
        }
        b -= cfg.learning_rate * gb / n;
    }
    let norm = dot(&v, &v).sqrt();
    let (weight, bias) = if norm > 0.0 {
        (v.iter().map(|x| x / norm).collect(), b / norm)
    } else {
        let mut w = vec![0.0; dim];
        w[0] = 1.0;
        (w, if b >= 0.0 { f64::MIN_POSITIVE } else { -f64::MIN_POSITIVE })
    };
    let proj_mean = |cls: Strategy| {
        let vals: Vec<f64> = train
            .iter()
            .filter(|s| s.label == cls)
            .map(|s| dot(&weight, &s.hidden))
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    let mut probe = LinearProbe {
        class_means: ClassMeans {
            far_sighted: proj_mean(Strategy::FarSighted),
            near_sighted: proj_mean(Strategy::NearSighted),
        },
        weight,
        bias,
        train_accuracy: 0.0,
        holdout_accuracy: 0.0,
        train_seed: cfg.seed,
        converged,
        final_loss: loss,
    };
    probe.train_accuracy = probe.accuracy(train);
    probe.holdout_accuracy = probe.accuracy(holdout);
    Ok(probe)
}

/// Episode-wise split followed by training.
pub fn fit_probe(samples: &[ProbeSample], cfg: &ProbeConfig) -> Result<LinearProbe> {
    let (train, holdout) = split_by_episode(samples, cfg.holdout_fraction, cfg.seed);
    train_probe(&train, &holdout, cfg)
}
