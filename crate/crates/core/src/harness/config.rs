use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metarl::TrainingConfig;
use crate::planning::{Structure, TreeConfig};
use crate::probe::{ApplyAt, ProbeConfig};

/// Experimental conditions (a), (b), (c).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    CorrectRepr,
    FakeMaintained,
    Control,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::CorrectRepr, Condition::FakeMaintained, Condition::Control];

    pub fn name(self) -> &'static str {
        match self {
            Condition::CorrectRepr => "correct_repr",
            Condition::FakeMaintained => "fake_maintained",
            Condition::Control => "control",
        }
    }

    pub fn runs_perturbation(self) -> bool {
        self != Condition::Control
    }

    pub fn runs_restoration(self) -> bool {
        self == Condition::CorrectRepr
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Condition::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown condition '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureFactor {
    Structured,
    Null,
}

impl StructureFactor {
    pub const ALL: [StructureFactor; 2] = [StructureFactor::Structured, StructureFactor::Null];

    pub fn name(self) -> &'static str {
        match self {
            StructureFactor::Structured => "structured",
            StructureFactor::Null => "null",
        }
    }
}

impl fmt::Display for StructureFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseBudgets {
    pub probe_episodes: usize,
    pub perturb_episodes: usize,
    pub restore_episodes: usize,
    pub test_cap: usize,
}

impl Default for PhaseBudgets {
    fn default() -> Self {
        Self {
            probe_episodes: 200,
            perturb_episodes: 100,
            restore_episodes: 100,
            test_cap: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterventionConfig {
    pub strength: f64,
    /// Keep the condition's intervention active after the shift.
    pub persist_after_shift: bool,
    pub apply_at: ApplyAt,
}

impl Default for InterventionConfig {
    fn default() -> Self {
        Self {
            strength: 1.0,
            persist_after_shift: true,
            apply_at: ApplyAt::InspectionDecisions,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriterionConfig {
    pub epsilon: f64,
    pub window: usize,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.15,
            window: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProtocolConfig {
    pub seeds: Vec<u64>,
    pub conditions: Vec<Condition>,
    pub structure_factors: Vec<StructureFactor>,
    pub pre_shift: Structure,
    pub post_shift: Structure,
    pub bootstrap_resamples: usize,
    pub min_uncensored: usize,
    /// Train one policy and reuse it for every seed instead of one per seed.
    pub share_policy: bool,
    pub tree: TreeConfig,
    pub training: TrainingConfig,
    pub probe: ProbeConfig,
    pub phases: PhaseBudgets,
    pub intervention: InterventionConfig,
    pub criterion: CriterionConfig,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            seeds: (0..30).collect(),
            conditions: Condition::ALL.to_vec(),
            structure_factors: StructureFactor::ALL.to_vec(),
            pre_shift: Structure::FarSighted,
            post_shift: Structure::NearSighted,
            bootstrap_resamples: 10_000,
            min_uncensored: 10,
            share_policy: true,
            tree: TreeConfig::default(),
            training: TrainingConfig::default(),
            probe: ProbeConfig::default(),
            phases: PhaseBudgets::default(),
            intervention: InterventionConfig::default(),
            criterion: CriterionConfig::default(),
        }
    }
}

impl ProtocolConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        self.training.validate()?;
        let mut seen = std::collections::BTreeSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::Config(format!("seed {s} listed twice")));
        }
        if !(0.0..=1.0).contains(&self.intervention.strength) {
            return Err(Error::Config("intervention.strength must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.criterion.epsilon) || self.criterion.window == 0 {
            return Err(Error::Config("criterion needs epsilon in [0, 1) and window >= 1".into()));
        }
        if self.phases.test_cap == 0 || self.phases.probe_episodes < 2 {
            return Err(Error::Config("phases need test_cap >= 1 and probe_episodes >= 2".into()));
        }
        if self.pre_shift == Structure::Null || self.post_shift == Structure::Null {
            return Err(Error::Config("the shift must be between structured trees".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_toml_fills_defaults() {
        let cfg = ProtocolConfig::from_toml_str(
            "seeds = [1, 2]\nconditions = [\"control\"]\n[tree]\ncost = 0.25\n[phases]\ntest_cap = 50\n",
        )
        .unwrap();
        assert_eq!(cfg.seeds, vec![1, 2]);
        assert_eq!(cfg.tree.depth, 3);
        assert_eq!(cfg.tree.cost, 0.25);
        assert_eq!(cfg.phases.test_cap, 50);
        assert_eq!(cfg.phases.probe_episodes, 200);
    }

    #[test]
    fn unknown_keys_and_bad_values_fail() {
        assert!(ProtocolConfig::from_toml_str("sedes = [1]").is_err());
        assert!(ProtocolConfig::from_toml_str("seeds = [1, 1]").is_err());
        assert!(ProtocolConfig::from_toml_str("[intervention]\nstrength = 2.0").is_err());
    }
}
