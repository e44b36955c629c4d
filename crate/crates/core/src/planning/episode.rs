use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::tree::{PlanningTree, Structure, TreeConfig};
use crate::error::{Error, Result};

/// Policy-level action. `Commit` resolves to the best path given what has been revealed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Inspect(usize),
    Commit,
}

impl Action {
    /// Index in the flat action space: inspections `0..n` for nodes `1..=n`, then commit.
    pub fn index(self, cfg: &TreeConfig) -> usize {
        match self {
            Action::Inspect(node) => node - 1,
            Action::Commit => cfg.non_root_count(),
        }
    }

    pub fn from_index(i: usize, cfg: &TreeConfig) -> Result<Self> {
        let n = cfg.non_root_count();
        match i.cmp(&n) {
            std::cmp::Ordering::Less => Ok(Action::Inspect(i + 1)),
            std::cmp::Ordering::Equal => Ok(Action::Commit),
            std::cmp::Ordering::Greater => Err(Error::IllegalAction(format!(
                "action index {i} outside 0..={n}"
            ))),
        }
    }
}

pub fn action_dim(cfg: &TreeConfig) -> usize {
    cfg.non_root_count() + 1
}

/// Revealed values and flags per node, one-hot previous action, previous reward.
pub fn observation_dim(cfg: &TreeConfig) -> usize {
    2 * cfg.non_root_count() + action_dim(cfg) + 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LoggedAction {
    Inspect { node: usize },
    Commit { path: Vec<usize> },
}

/// Process trace of one finished episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub structure: Structure,
    pub seed: u64,
    pub actions: Vec<LoggedAction>,
    pub revealed: Vec<usize>,
    pub payoff: f64,
}

impl EpisodeLog {
    pub fn inspections(&self) -> impl Iterator<Item = usize> + '_ {
        self.actions.iter().filter_map(|a| match a {
            LoggedAction::Inspect { node } => Some(*node),
            LoggedAction::Commit { .. } => None,
        })
    }

    pub fn inspection_count(&self) -> usize {
        self.inspections().count()
    }

    /// Replays the action stream against the tree it was played on.
    pub fn recompute_payoff(&self, cfg: &TreeConfig, tree: &PlanningTree) -> Result<f64> {
        let mut ep = Episode::new(cfg, tree);
        for a in &self.actions {
            match a {
                LoggedAction::Inspect { node } => {
                    ep.step(Action::Inspect(*node))?;
                }
                LoggedAction::Commit { path } => {
                    ep.commit_path(path)?;
                }
            }
        }
        if !ep.is_done() {
            return Err(Error::InvalidInput("log has no commit".into()));
        }
        Ok(ep.payoff())
    }
}

pub fn write_logs<W: Write>(logs: &[EpisodeLog], mut out: W) -> Result<()> {
    for log in logs {
        serde_json::to_writer(&mut out, log)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_logs<R: BufRead>(input: R) -> Result<Vec<EpisodeLog>> {
    let mut logs = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        logs.push(serde_json::from_str(&line)?);
    }
    Ok(logs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Single-owner stepping state for one tree.
#[derive(Debug, Clone)]
pub struct Episode<'a> {
    cfg: &'a TreeConfig,
    tree: &'a PlanningTree,
    revealed: Vec<bool>,
    actions: Vec<LoggedAction>,
    revealed_order: Vec<usize>,
    payoff: f64,
    done: bool,
    last_action: Option<usize>,
    last_reward: f64,
}

impl<'a> Episode<'a> {
    pub fn new(cfg: &'a TreeConfig, tree: &'a PlanningTree) -> Self {
        Self {
            cfg,
            tree,
            revealed: vec![false; cfg.node_count()],
            actions: Vec::new(),
            revealed_order: Vec::new(),
            payoff: 0.0,
            done: false,
            last_action: None,
            last_reward: 0.0,
        }
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn payoff(&self) -> f64 {
        self.payoff
    }

    pub fn is_revealed(&self, node: usize) -> bool {
        self.revealed.get(node).copied().unwrap_or(false)
    }

    pub fn inspections_so_far(&self) -> usize {
        self.revealed_order.len()
    }

    pub fn revealed_value(&self, node: usize) -> Option<f64> {
        self.is_revealed(node).then(|| self.tree.rewards[node])
    }

    /// Legal actions in flat-index order.
    pub fn legal_mask(&self) -> Vec<bool> {
        let mut m: Vec<bool> = (1..self.cfg.node_count())
            .map(|n| !self.done && !self.revealed[n])
            .collect();
        m.push(!self.done);
        m
    }

    pub fn observation(&self) -> Vec<f64> {
        let n = self.cfg.non_root_count();
        let scale = self.cfg.value_scale();
        let mut obs = Vec::with_capacity(observation_dim(self.cfg));
        for node in 1..=n {
            if self.revealed[node] {
                obs.push(self.tree.rewards[node] / scale);
                obs.push(1.0);
            } else {
                obs.push(0.0);
                obs.push(0.0);
            }
        }
        let start = obs.len();
        obs.resize(start + n + 1, 0.0);
        if let Some(a) = self.last_action {
            obs[start + a] = 1.0;
        }
        obs.push(self.last_reward / scale);
        obs
    }

    /// Best path by revealed sum (unrevealed nodes count as their prior mean 0), ties to the lowest leaf.
    pub fn best_revealed_path(&self) -> Vec<usize> {
        let mut best: Option<(f64, Vec<usize>)> = None;
        for p in self.cfg.paths() {
            let v: f64 = p
                .iter()
                .map(|&n| if self.revealed[n] { self.tree.rewards[n] } else { 0.0 })
                .sum();
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, p));
            }
        }
        best.map(|b| b.1).unwrap_or_default()
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::IllegalAction("episode already committed".into()));
        }
        let reward = match action {
            Action::Inspect(node) => {
                if node == 0 || node >= self.cfg.node_count() {
                    return Err(Error::IllegalAction(format!("no node {node}")));
                }
                if self.revealed[node] {
                    return Err(Error::IllegalAction(format!("node {node} already inspected")));
                }
                self.revealed[node] = true;
                self.revealed_order.push(node);
                self.actions.push(LoggedAction::Inspect { node });
                -self.cfg.cost
            }
            Action::Commit => {
                let path = self.best_revealed_path();
                return self.finish_commit(path, action);
            }
        };
        self.payoff += reward;
        self.last_action = Some(action.index(self.cfg));
        self.last_reward = reward;
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: false,
        })
    }

    /// Commits an explicit root-to-leaf path (used for replay).
    pub fn commit_path(&mut self, path: &[usize]) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::IllegalAction("episode already committed".into()));
        }
        if !self.cfg.paths().iter().any(|p| p == path) {
            return Err(Error::IllegalAction(format!("{path:?} is not a root-to-leaf path")));
        }
        self.finish_commit(path.to_vec(), Action::Commit)
    }

    fn finish_commit(&mut self, path: Vec<usize>, action: Action) -> Result<StepOutcome> {
        let reward: f64 = path.iter().map(|&n| self.tree.rewards[n]).sum();
        self.payoff += reward;
        self.actions.push(LoggedAction::Commit { path });
        self.done = true;
        self.last_action = Some(action.index(self.cfg));
        self.last_reward = reward;
        Ok(StepOutcome {
            observation: self.observation(),
            reward,
            done: true,
        })
    }

    pub fn into_log(self) -> EpisodeLog {
        EpisodeLog {
            structure: self.tree.structure,
            seed: self.tree.seed,
            actions: self.actions,
            revealed: self.revealed_order,
            payoff: self.payoff,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::tree::generate_tree;

    fn setup() -> (TreeConfig, PlanningTree) {
        let cfg = TreeConfig::default();
        let tree = generate_tree(&cfg, Structure::NearSighted, 11);
        (cfg, tree)
    }

    #[test]
    fn reinspecting_is_illegal() {
        let (cfg, tree) = setup();
        let mut ep = Episode::new(&cfg, &tree);
        ep.step(Action::Inspect(3)).unwrap();
        assert!(matches!(ep.step(Action::Inspect(3)), Err(Error::IllegalAction(_))));
        assert!(!ep.legal_mask()[2]);
    }

    #[test]
    fn blind_commit_takes_first_path_at_no_cost() {
        let (cfg, tree) = setup();
        let mut ep = Episode::new(&cfg, &tree);
        let out = ep.step(Action::Commit).unwrap();
        assert!(out.done);
        let sum: f64 = [1, 3, 7].iter().map(|&n| tree.rewards[n]).sum();
        assert_eq!(ep.payoff(), sum);
        assert!(ep.step(Action::Commit).is_err());
    }

    #[test]
    fn observation_layout() {
        let (cfg, tree) = setup();
        let mut ep = Episode::new(&cfg, &tree);
        assert_eq!(ep.observation().len(), 44);
        let o = ep.step(Action::Inspect(2)).unwrap().observation;
        assert_eq!(o[2], tree.rewards[2] / 4.0);
        assert_eq!(o[3], 1.0);
        assert_eq!(o[28 + 1], 1.0);
        assert!((o[43] + 0.05).abs() < 1e-15);
    }

    #[test]
    fn log_replays_and_round_trips() {
        let (cfg, tree) = setup();
        let mut ep = Episode::new(&cfg, &tree);
        for a in [Action::Inspect(1), Action::Inspect(2), Action::Inspect(9), Action::Commit] {
            ep.step(a).unwrap();
        }
        let log = ep.into_log();
        assert_eq!(log.recompute_payoff(&cfg, &tree).unwrap(), log.payoff);
        let mut buf = Vec::new();
        write_logs(std::slice::from_ref(&log), &mut buf).unwrap();
        let back = read_logs(buf.as_slice()).unwrap();
        assert_eq!(back, vec![log]);
    }
}
