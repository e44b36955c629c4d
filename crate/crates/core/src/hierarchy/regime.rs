use std::fmt;

use serde::{Deserialize, Serialize};

use super::trace::Trace;
use crate::error::{Error, Result};

/// The four self-modification regimes, ordered by the highest level modified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Regime {
    Fixed,
    Local,
    Structural,
    Reflexive,
}

impl Regime {
    /// 1-based regime number.
    pub fn ordinal(self) -> u8 {
        match self {
            Regime::Fixed => 1,
            Regime::Local => 2,
            Regime::Structural => 3,
            Regime::Reflexive => 4,
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::Fixed => "Fixed",
            Regime::Local => "Local",
            Regime::Structural => "Structural",
            Regime::Reflexive => "Reflexive",
        };
        f.write_str(s)
    }
}

/// Raised when the top level changes endogenously without being both
/// represented and causally accessible at the time of the change.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnrepresentedNormChange {
    pub t: u64,
    pub repr: bool,
    pub causal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegimeLabel {
    pub regime: Regime,
    pub max_endogenous_level_changed: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<UnrepresentedNormChange>,
}

impl RegimeLabel {
    /// Top-level change that is causal but not represented ("structural-plus").
    pub fn is_structural_plus(&self) -> bool {
        self.regime == Regime::Structural && !self.warnings.is_empty()
    }
}

/// Labels a trace by the highest level it modifies endogenously.
///
/// Exogenous changes are ignored. A top-level change counts as reflexive only
/// when both masks are set at `k_max` in the snapshot where the change starts;
/// otherwise it is reported as structural with a warning.
pub fn classify_regime(trace: &Trace) -> Result<RegimeLabel> {
    trace.validate()?;
    let k_max = trace
        .k_max()
        .ok_or_else(|| Error::MalformedTrace("empty trace".into()))?;

    let mut max_level: Option<usize> = None;
    let mut reflexive = false;
    let mut warnings = Vec::new();

    for (t, changed) in trace.endogenous_changes()? {
        let Some(&top) = changed.iter().next_back() else {
            continue;
        };
        max_level = Some(max_level.map_or(top, |m| m.max(top)));
        if top == k_max {
            let snap = trace
                .snapshot_at(t)
                .ok_or_else(|| Error::MalformedTrace(format!("missing snapshot t={t}")))?;
            let (repr, causal) = (snap.repr_mask[k_max], snap.causal_mask[k_max]);
            if repr && causal {
                reflexive = true;
            } else {
                warnings.push(UnrepresentedNormChange { t, repr, causal });
            }
        }
    }

    let regime = match max_level {
        None => Regime::Fixed,
        Some(0) => Regime::Local,
        Some(_) if reflexive => Regime::Reflexive,
        Some(_) => Regime::Structural,
    };
    Ok(RegimeLabel {
        regime,
        max_endogenous_level_changed: max_level,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureViolation {
    pub event_index: usize,
    pub t: u64,
    pub evaluator_level: usize,
    pub judged_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureReport {
    pub passed: bool,
    pub first_violation: Option<ClosureViolation>,
}

/// Checks that every endogenous modification was judged by a rule that did
/// not itself change across the step in which the judgment was made.
///
/// A norm may be revised at some step, provided the judgment authorizing the
/// revision was made while the norm was still fixed.
pub fn check_causal_closure(trace: &Trace) -> Result<ClosureReport> {
    trace.validate()?;
    for (i, e) in trace.events.iter().enumerate() {
        if e.exogenous {
            continue;
        }
        let op = &e.op;
        let before = trace.snapshot_at(op.judged_at);
        let after = trace.snapshot_at(op.judged_at + 1);
        let (Some(before), Some(after)) = (before, after) else {
            return Err(Error::MalformedTrace(format!(
                "event {i} judged at t={} lacks surrounding snapshots",
                op.judged_at
            )));
        };
        if before.levels[op.evaluator_level] != after.levels[op.evaluator_level] {
            return Ok(ClosureReport {
                passed: false,
                first_violation: Some(ClosureViolation {
                    event_index: i,
                    t: op.timestep,
                    evaluator_level: op.evaluator_level,
                    judged_at: op.judged_at,
                }),
            });
        }
    }
    Ok(ClosureReport {
        passed: true,
        first_violation: None,
    })
}
