use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Content digest of one rule at one hierarchy level.
///
/// Equality is by `payload_hash` alone; `level` and `payload_dim` are
/// descriptive.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleFingerprint {
    pub level: usize,
    #[serde(rename = "hash")]
    pub payload_hash: String,
    #[serde(rename = "dim")]
    pub payload_dim: usize,
}

impl PartialEq for RuleFingerprint {
    fn eq(&self, other: &Self) -> bool {
        self.payload_hash == other.payload_hash
    }
}

impl Eq for RuleFingerprint {}

/// Canonical text for a real parameter: 12 significant digits, signed zero folded.
pub fn canonical_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

fn digest_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(32);
    for b in digest.iter().take(16) {
        let _ = write!(out, "{b:02x}");
    }
    out
}

impl RuleFingerprint {
    /// Fingerprint of a numeric rule (weights, associative strengths, norm weights).
    pub fn from_reals(level: usize, kind: &str, values: &[f64]) -> Self {
        let mut canon = String::with_capacity(16 + values.len() * 18);
        canon.push_str(kind);
        canon.push(':');
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                canon.push(',');
            }
            canon.push_str(&canonical_real(*v));
        }
        Self {
            level,
            payload_hash: digest_hex(canon.as_bytes()),
            payload_dim: values.len(),
        }
    }

    /// Fingerprint of a structural or symbolic rule.
    pub fn symbolic(level: usize, description: &str) -> Self {
        let canon = format!("sym:{description}");
        Self {
            level,
            payload_hash: digest_hex(canon.as_bytes()),
            payload_dim: 0,
        }
    }
}

/// One snapshot of the rule hierarchy, level 0 through `k_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionalState {
    pub t: u64,
    pub levels: Vec<RuleFingerprint>,
    pub repr_mask: Vec<bool>,
    pub causal_mask: Vec<bool>,
}

impl FunctionalState {
    pub fn new(
        t: u64,
        levels: Vec<RuleFingerprint>,
        repr_mask: Vec<bool>,
        causal_mask: Vec<bool>,
    ) -> Result<Self> {
        let state = Self {
            t,
            levels,
            repr_mask,
            causal_mask,
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels.len() < 2 {
            return Err(Error::Structural(format!(
                "a hierarchy needs at least two levels (got {})",
                self.levels.len()
            )));
        }
        if self.repr_mask.len() != self.levels.len() || self.causal_mask.len() != self.levels.len()
        {
            return Err(Error::Structural(format!(
                "mask lengths ({}, {}) do not match depth {}",
                self.repr_mask.len(),
                self.causal_mask.len(),
                self.levels.len()
            )));
        }
        for (i, fp) in self.levels.iter().enumerate() {
            if fp.level != i {
                return Err(Error::Structural(format!(
                    "fingerprint at index {i} claims level {}",
                    fp.level
                )));
            }
        }
        Ok(())
    }

    pub fn k_max(&self) -> usize {
        self.levels.len() - 1
    }

    /// Levels that are both represented and causally accessible.
    pub fn reflexive_levels(&self) -> Vec<usize> {
        (0..self.levels.len())
            .filter(|&i| self.repr_mask[i] && self.causal_mask[i])
            .collect()
    }
}

/// Levels whose payload hash differs between two consecutive snapshots.
pub fn diff_states(a: &FunctionalState, b: &FunctionalState) -> Result<BTreeSet<usize>> {
    if a.levels.len() != b.levels.len() {
        return Err(Error::Structural(format!(
            "hierarchy depth mismatch: {} vs {}",
            a.levels.len(),
            b.levels.len()
        )));
    }
    if a.t + 1 != b.t {
        return Err(Error::Structural(format!(
            "snapshots are not consecutive (t = {} then {})",
            a.t, b.t
        )));
    }
    Ok(a
        .levels
        .iter()
        .zip(&b.levels)
        .enumerate()
        .filter(|(_, (x, y))| x != y)
        .map(|(i, _)| i)
        .collect())
}

/// Static projection from the functional state to its self-representation.
///
/// Fidelity is per level in `[0, 1]`; a level with zero fidelity is never
/// represented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionOperator {
    fidelity: Vec<f64>,
}

impl ProjectionOperator {
    pub fn new(fidelity: Vec<f64>) -> Result<Self> {
        if let Some(bad) = fidelity.iter().find(|f| !(0.0..=1.0).contains(*f)) {
            return Err(Error::InvalidInput(format!(
                "projection fidelity {bad} outside [0, 1]"
            )));
        }
        Ok(Self { fidelity })
    }

    pub fn fidelity(&self) -> &[f64] {
        &self.fidelity
    }

    /// Representation mask produced for a hierarchy of this depth.
    pub fn repr_mask(&self) -> Vec<bool> {
        self.fidelity.iter().map(|&f| f > 0.0).collect()
    }

    /// Builds a state whose repr mask is the projection of `levels`.
    pub fn project(
        &self,
        t: u64,
        levels: Vec<RuleFingerprint>,
        causal_mask: Vec<bool>,
    ) -> Result<FunctionalState> {
        if levels.len() != self.fidelity.len() {
            return Err(Error::Structural(format!(
                "projection covers {} levels, state has {}",
                self.fidelity.len(),
                levels.len()
            )));
        }
        FunctionalState::new(t, levels, self.repr_mask(), causal_mask)
    }
}
