use serde::{Deserialize, Serialize};

use super::episode::EpisodeLog;
use super::tree::TreeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    FarSighted,
    NearSighted,
    Unclassified,
}

impl Strategy {
    pub fn opposite(self) -> Self {
        match self {
            Strategy::FarSighted => Strategy::NearSighted,
            Strategy::NearSighted => Strategy::FarSighted,
            Strategy::Unclassified => Strategy::Unclassified,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::FarSighted => "far_sighted",
            Strategy::NearSighted => "near_sighted",
            Strategy::Unclassified => "unclassified",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyLabel {
    pub label: Strategy,
    pub deep_inspection_fraction: f64,
}

/// Smallest depth counted as a deep inspection, `ceil(depth / 2) + 1`.
pub fn deep_threshold(depth: usize) -> usize {
    depth.div_ceil(2) + 1
}

/// Labels a window of episodes by the share of inspections made at deep nodes.
pub fn classify_strategy(cfg: &TreeConfig, logs: &[EpisodeLog]) -> StrategyLabel {
    let threshold = deep_threshold(cfg.depth).min(cfg.depth);
    let (mut deep, mut total) = (0usize, 0usize);
    for log in logs {
        for node in log.inspections() {
            total += 1;
            if cfg.depth_of(node) >= threshold {
                deep += 1;
            }
        }
    }
    if total == 0 {
        return StrategyLabel {
            label: Strategy::Unclassified,
            deep_inspection_fraction: 0.0,
        };
    }
    let frac = deep as f64 / total as f64;
    StrategyLabel {
        label: if frac >= 0.5 {
            Strategy::FarSighted
        } else {
            Strategy::NearSighted
        },
        deep_inspection_fraction: frac,
    }
}

pub fn classify_episode(cfg: &TreeConfig, log: &EpisodeLog) -> StrategyLabel {
    classify_strategy(cfg, std::slice::from_ref(log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::episode::LoggedAction;
    use crate::planning::tree::Structure;

    fn log(nodes: &[usize]) -> EpisodeLog {
        let mut actions: Vec<_> = nodes
            .iter()
            .map(|&node| LoggedAction::Inspect { node })
            .collect();
        actions.push(LoggedAction::Commit {
            path: vec![1, 3, 7],
        });
        EpisodeLog {
            structure: Structure::FarSighted,
            seed: 0,
            actions,
            revealed: nodes.to_vec(),
            payoff: 0.0,
        }
    }

    #[test]
    fn boundaries_and_mixed_count() {
        let cfg = TreeConfig::default();
        assert_eq!(deep_threshold(3), 3);
        let far = classify_episode(&cfg, &log(&[7, 8, 9]));
        assert_eq!((far.label, far.deep_inspection_fraction), (Strategy::FarSighted, 1.0));
        let near = classify_episode(&cfg, &log(&[1, 2]));
        assert_eq!((near.label, near.deep_inspection_fraction), (Strategy::NearSighted, 0.0));
        let mixed = classify_episode(&cfg, &log(&[7, 10, 14, 1, 2]));
        assert_eq!(mixed.label, Strategy::FarSighted);
        assert!((mixed.deep_inspection_fraction - 0.6).abs() < 1e-15);
        assert_eq!(classify_episode(&cfg, &log(&[])).label, Strategy::Unclassified);
    }

    #[test]
    fn window_pools_inspections() {
        let cfg = TreeConfig::default();
        let l = classify_strategy(&cfg, &[log(&[7]), log(&[1, 2, 3])]);
        assert_eq!(l.deep_inspection_fraction, 0.25);
    }
}
