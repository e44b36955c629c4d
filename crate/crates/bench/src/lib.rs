//! Shared fixtures for the criterion benchmarks.

use regimelab::metarl::{new_policy, RecurrentPolicy, TrainingConfig};
use regimelab::planning::{generate_tree, PlanningTree, Structure, TreeConfig};

pub fn fixture_policy(hidden: usize) -> (TreeConfig, RecurrentPolicy) {
    let tree = TreeConfig::default();
    let tc = TrainingConfig {
        hidden_dim: hidden,
        ..TrainingConfig::default()
    };
    let p = new_policy(&tree, &tc);
    (tree, p)
}

pub fn fixture_trees(cfg: &TreeConfig, n: usize) -> Vec<PlanningTree> {
    (0..n)
        .map(|i| {
            let s = if i % 2 == 0 {
                Structure::FarSighted
            } else {
                Structure::NearSighted
            };
            generate_tree(cfg, s, i as u64)
        })
        .collect()
}
