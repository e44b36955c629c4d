use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Latent structure deciding which depths carry the large rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    FarSighted,
    NearSighted,
    Null,
}

impl Structure {
    pub const ALL: [Structure; 3] = [Structure::FarSighted, Structure::NearSighted, Structure::Null];

    pub fn name(self) -> &'static str {
        match self {
            Structure::FarSighted => "far_sighted",
            Structure::NearSighted => "near_sighted",
            Structure::Null => "null",
        }
    }

    pub(crate) fn tag(self) -> u64 {
        match self {
            Structure::FarSighted => 1,
            Structure::NearSighted => 2,
            Structure::Null => 3,
        }
    }
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Structure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Structure::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown structure '{s}'")))
    }
}

/// Per-depth reward half-widths, index 0 = depth 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scales {
    pub far: Vec<f64>,
    pub near: Vec<f64>,
    pub null: Vec<f64>,
}

impl Default for Scales {
    fn default() -> Self {
        Self {
            far: vec![1.0, 2.0, 4.0],
            near: vec![4.0, 2.0, 1.0],
            null: vec![2.7, 2.7, 2.7],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeConfig {
    pub depth: usize,
    pub branching: usize,
    pub cost: f64,
    pub scales: Scales,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            depth: 3,
            branching: 2,
            cost: 0.2,
            scales: Scales::default(),
        }
    }
}

impl TreeConfig {
    pub fn scales_for(&self, s: Structure) -> &[f64] {
        match s {
            Structure::FarSighted => &self.scales.far,
            Structure::NearSighted => &self.scales.near,
            Structure::Null => &self.scales.null,
        }
    }

    /// Total node count including the root.
    pub fn node_count(&self) -> usize {
        (0..=self.depth).map(|d| self.branching.pow(d as u32)).sum()
    }

    pub fn non_root_count(&self) -> usize {
        self.node_count() - 1
    }

    pub fn leaf_count(&self) -> usize {
        self.branching.pow(self.depth as u32)
    }

    pub fn depth_of(&self, node: usize) -> usize {
        let mut first = 0;
        let mut width = 1;
        for d in 0..=self.depth {
            if node < first + width {
                return d;
            }
            first += width;
            width *= self.branching;
        }
        usize::MAX
    }

    /// Node ids at depth `d` in breadth-first order.
    pub fn nodes_at_depth(&self, d: usize) -> std::ops::Range<usize> {
        let first: usize = (0..d).map(|k| self.branching.pow(k as u32)).sum();
        first..first + self.branching.pow(d as u32)
    }

    pub fn children(&self, node: usize) -> std::ops::Range<usize> {
        if self.depth_of(node) >= self.depth {
            return 0..0;
        }
        let first = node * self.branching + 1;
        first..first + self.branching
    }

    /// Root-to-leaf paths (excluding the root), ordered by leaf id.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        self.nodes_at_depth(self.depth)
            .map(|leaf| {
                let mut path = vec![leaf];
                let mut n = leaf;
                while n > 0 {
                    n = (n - 1) / self.branching;
                    if n > 0 {
                        path.push(n);
                    }
                }
                path.reverse();
                path
            })
            .collect()
    }

    /// Largest reward half-width across structures; used to normalize observations.
    pub fn value_scale(&self) -> f64 {
        [&self.scales.far, &self.scales.near, &self.scales.null]
            .iter()
            .flat_map(|v| v.iter().copied())
            .fold(1e-12, f64::max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth < 1 || self.branching < 2 {
            return Err(Error::Config(format!(
                "tree needs depth >= 1 and branching >= 2 (got {}, {})",
                self.depth, self.branching
            )));
        }
        if self.node_count() > 1024 {
            return Err(Error::Config("tree too large (more than 1024 nodes)".into()));
        }
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(Error::Config(format!("cost {} must be > 0", self.cost)));
        }
        for s in Structure::ALL {
            let sc = self.scales_for(s);
            if sc.len() != self.depth || sc.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(Error::Config(format!(
                    "scales.{} must hold {} finite non-negative values",
                    match s {
                        Structure::FarSighted => "far",
                        Structure::NearSighted => "near",
                        Structure::Null => "null",
                    },
                    self.depth
                )));
            }
        }
        for s in [Structure::FarSighted, Structure::NearSighted] {
            let best = expected_best_path(self, s);
            if best <= self.cost * self.depth as f64 {
                return Err(Error::Config(format!(
                    "expected best-path value {best:.3} under {s} does not exceed cost x depth"
                )));
            }
        }
        Ok(())
    }
}

/// Monte-Carlo expected value of the best root-to-leaf path under full information.
fn expected_best_path(cfg: &TreeConfig, s: Structure) -> f64 {
    const N: usize = 2000;
    let paths = cfg.paths();
    let total: f64 = (0..N as u64)
        .map(|i| {
            let t = draw(cfg, s, 0xB0B, i);
            paths
                .iter()
                .map(|p| p.iter().map(|&n| t[n]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / N as f64
}

fn draw(cfg: &TreeConfig, s: Structure, seed: u64, stream: u64) -> Vec<f64> {
    let mut rng = seeded(seed, &[0x7EEE, s.tag(), stream]);
    let scales = cfg.scales_for(s);
    (0..cfg.node_count())
        .map(|n| {
            if n == 0 {
                0.0
            } else {
                let sc = scales[cfg.depth_of(n) - 1];
                sc * rng.gen_range(-1.0..=1.0)
            }
        })
        .collect()
}

/// A planning tree with its hidden node rewards (index = node id, root = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningTree {
    pub structure: Structure,
    pub seed: u64,
    pub rewards: Vec<f64>,
}

/// Deterministic in `(structure, seed)` for a given config.
pub fn generate_tree(cfg: &TreeConfig, structure: Structure, seed: u64) -> PlanningTree {
    PlanningTree {
        structure,
        seed,
        rewards: draw(cfg, structure, seed, 0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_of_default_tree() {
        let c = TreeConfig::default();
        assert_eq!(c.non_root_count(), 14);
        assert_eq!(c.depth_of(0), 0);
        assert_eq!(c.depth_of(2), 1);
        assert_eq!(c.depth_of(6), 2);
        assert_eq!(c.depth_of(7), 3);
        assert_eq!(c.depth_of(14), 3);
        assert_eq!(c.children(1), 3..5);
        assert_eq!(c.paths()[0], vec![1, 3, 7]);
        assert_eq!(c.paths()[7], vec![2, 6, 14]);
        c.validate().unwrap();
    }

    #[test]
    fn same_seed_same_tree() {
        let c = TreeConfig::default();
        assert_eq!(
            generate_tree(&c, Structure::FarSighted, 5),
            generate_tree(&c, Structure::FarSighted, 5)
        );
        assert_ne!(
            generate_tree(&c, Structure::FarSighted, 5),
            generate_tree(&c, Structure::FarSighted, 6)
        );
    }

    #[test]
    fn bad_configs_are_rejected() {
        let mut c = TreeConfig::default();
        c.scales.far.pop();
        assert!(c.validate().is_err());
        let c = TreeConfig {
            cost: 5.0,
            ..TreeConfig::default()
        };
        assert!(c.validate().is_err());
        assert!("diagonal".parse::<Structure>().is_err());
    }
}
