use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::state::{diff_states, FunctionalState, RuleFingerprint};
use crate::error::{Error, Result};

/// One downward operation `R_{i+1} -> R_i` recorded at `timestep`.
///
/// The operation takes effect between snapshot `timestep` and `timestep + 1`.
/// `evaluator_level` names the rule that judged the modification and
/// `judged_at` the snapshot at which it did so; for ordinary operations the
/// evaluator is the norm at `k_max` and the judgment is simultaneous.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalOperation {
    pub source_level: usize,
    pub target_level: usize,
    #[serde(rename = "repr_triple")]
    pub has_repr_triple: bool,
    #[serde(rename = "causal_link")]
    pub has_causal_link: bool,
    #[serde(rename = "t")]
    pub timestep: u64,
    pub evaluator_level: usize,
    pub judged_at: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl LocalOperation {
    /// `source -> target` judged by `evaluator` in the same step.
    pub fn new(target_level: usize, evaluator_level: usize) -> Self {
        Self {
            source_level: target_level + 1,
            target_level,
            has_repr_triple: false,
            has_causal_link: true,
            timestep: 0,
            evaluator_level,
            judged_at: 0,
            tag: None,
        }
    }

    /// Revision of the top level through its own representation.
    pub fn norm_revision(k_max: usize) -> Self {
        Self {
            source_level: k_max,
            target_level: k_max,
            has_repr_triple: true,
            has_causal_link: true,
            timestep: 0,
            evaluator_level: k_max,
            judged_at: 0,
            tag: None,
        }
    }

    pub fn with_repr_triple(mut self, present: bool) -> Self {
        self.has_repr_triple = present;
        self
    }

    pub fn with_causal_link(mut self, present: bool) -> Self {
        self.has_causal_link = present;
        self
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.tag = Some(tag.into());
        self
    }

    /// Judgment made at an earlier snapshot than the one the operation applies at.
    pub fn judged_earlier(mut self, judged_at: u64) -> Self {
        self.judged_at = judged_at;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    #[serde(rename = "event")]
    pub op: LocalOperation,
    #[serde(rename = "exo")]
    pub exogenous: bool,
}

/// Time-ordered snapshots plus the operations that explain their changes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Trace {
    pub snapshots: Vec<FunctionalState>,
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn new(snapshots: Vec<FunctionalState>, events: Vec<TraceEvent>) -> Result<Self> {
        let trace = Self { snapshots, events };
        trace.validate()?;
        Ok(trace)
    }

    pub fn k_max(&self) -> Option<usize> {
        self.snapshots.first().map(FunctionalState::k_max)
    }

    pub fn snapshot_at(&self, t: u64) -> Option<&FunctionalState> {
        let first = self.snapshots.first()?.t;
        let idx = t.checked_sub(first)? as usize;
        self.snapshots.get(idx)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .snapshots
            .first()
            .ok_or_else(|| Error::MalformedTrace("trace has no snapshots".into()))?;
        let depth = first.levels.len();
        for s in &self.snapshots {
            s.validate()
                .map_err(|e| Error::MalformedTrace(format!("snapshot t={}: {e}", s.t)))?;
            if s.levels.len() != depth {
                return Err(Error::MalformedTrace(format!(
                    "snapshot t={} has depth {} instead of {depth}",
                    s.t,
                    s.levels.len()
                )));
            }
        }
        for w in self.snapshots.windows(2) {
            if w[1].t != w[0].t + 1 {
                return Err(Error::MalformedTrace(format!(
                    "snapshot times must be consecutive ({} then {})",
                    w[0].t, w[1].t
                )));
            }
        }
        let k_max = depth - 1;
        let last = self.snapshots.last().map(|s| s.t).unwrap_or(first.t);
        for (i, e) in self.events.iter().enumerate() {
            let op = &e.op;
            if op.timestep < first.t || op.timestep >= last {
                return Err(Error::MalformedTrace(format!(
                    "event {i} at t={} has no following snapshot",
                    op.timestep
                )));
            }
            if op.target_level > k_max || op.evaluator_level > k_max {
                return Err(Error::MalformedTrace(format!(
                    "event {i} references a level above k_max={k_max}"
                )));
            }
            let adjacent = op.source_level == op.target_level + 1;
            let top_revision = op.target_level == k_max && op.source_level == k_max;
            if !(adjacent || top_revision) {
                return Err(Error::MalformedTrace(format!(
                    "event {i} links level {} to {}; only adjacent levels may be linked",
                    op.source_level, op.target_level
                )));
            }
            if op.judged_at > op.timestep || op.judged_at < first.t {
                return Err(Error::MalformedTrace(format!(
                    "event {i} judged at t={} outside [{}, {}]",
                    op.judged_at, first.t, op.timestep
                )));
            }
        }
        let targets = self.targets_by_time();
        for w in self.snapshots.windows(2) {
            let changed = diff_states(&w[0], &w[1])?;
            for level in changed {
                let explained = targets
                    .get(&w[0].t)
                    .is_some_and(|ts| ts.iter().any(|&(lvl, _)| lvl == level));
                if !explained {
                    return Err(Error::MalformedTrace(format!(
                        "level {level} changed between t={} and t={} without an event",
                        w[0].t, w[1].t
                    )));
                }
            }
        }
        Ok(())
    }

    fn targets_by_time(&self) -> HashMap<u64, Vec<(usize, bool)>> {
        let mut map: HashMap<u64, Vec<(usize, bool)>> = HashMap::new();
        for e in &self.events {
            map.entry(e.op.timestep)
                .or_default()
                .push((e.op.target_level, e.exogenous));
        }
        map
    }

    /// Levels changed endogenously at each transition, keyed by the earlier snapshot time.
    pub fn endogenous_changes(&self) -> Result<Vec<(u64, BTreeSet<usize>)>> {
        let targets = self.targets_by_time();
        let mut out = Vec::with_capacity(self.snapshots.len().saturating_sub(1));
        for w in self.snapshots.windows(2) {
            let changed = diff_states(&w[0], &w[1])?;
            let endo: BTreeSet<usize> = changed
                .into_iter()
                .filter(|&lvl| {
                    targets
                        .get(&w[0].t)
                        .is_some_and(|ts| ts.iter().any(|&(l, exo)| l == lvl && !exo))
                })
                .collect();
            out.push((w[0].t, endo));
        }
        Ok(out)
    }
}

/// Builds a trace step by step from an agent's point of view.
#[derive(Debug, Clone)]
pub struct TraceRecorder {
    trace: Trace,
}

impl TraceRecorder {
    pub fn new(initial: FunctionalState) -> Result<Self> {
        initial.validate()?;
        Ok(Self {
            trace: Trace {
                snapshots: vec![initial],
                events: Vec::new(),
            },
        })
    }

    pub fn current(&self) -> &FunctionalState {
        self.trace
            .snapshots
            .last()
            .expect("recorder always holds a snapshot")
    }

    pub fn now(&self) -> u64 {
        self.current().t
    }

    /// Appends the next snapshot with `updates` applied, stamping `events` with the current time.
    pub fn tick(
        &mut self,
        updates: Vec<RuleFingerprint>,
        events: Vec<(LocalOperation, bool)>,
    ) -> Result<()> {
        let now = self.now();
        let mut next = self.current().clone();
        next.t = now + 1;
        for fp in updates {
            let slot = next.levels.get_mut(fp.level).ok_or_else(|| {
                Error::Structural(format!("update for missing level {}", fp.level))
            })?;
            *slot = fp;
        }
        for (mut op, exogenous) in events {
            op.timestep = now;
            op.judged_at = now;
            self.trace.events.push(TraceEvent { op, exogenous });
        }
        self.trace.snapshots.push(next);
        Ok(())
    }

    /// Same as [`tick`](Self::tick) but keeps an explicit earlier judgment time.
    pub fn tick_judged(
        &mut self,
        updates: Vec<RuleFingerprint>,
        op: LocalOperation,
        judged_at: u64,
    ) -> Result<()> {
        let now = self.now();
        if judged_at > now {
            return Err(Error::InvalidInput(format!(
                "judgment at t={judged_at} is after the operation at t={now}"
            )));
        }
        self.tick(updates, Vec::new())?;
        let mut op = op;
        op.timestep = now;
        op.judged_at = judged_at;
        self.trace.events.push(TraceEvent {
            op,
            exogenous: false,
        });
        Ok(())
    }

    pub fn set_masks(&mut self, repr: Vec<bool>, causal: Vec<bool>) -> Result<()> {
        let cur = self.trace.snapshots.last_mut().expect("non-empty");
        cur.repr_mask = repr;
        cur.causal_mask = causal;
        cur.validate()
    }

    pub fn finish(self) -> Result<Trace> {
        self.trace.validate()?;
        Ok(self.trace)
    }
}
