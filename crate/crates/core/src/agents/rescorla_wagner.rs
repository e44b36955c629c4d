use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{FunctionalState, LocalOperation, RuleFingerprint, Trace, TraceRecorder};

/// Associative strengths plus the fixed parameters of the delta rule.
///
/// `v` is the level-0 rule; the update `ΔV = αβ(target − ΣV)` with its
/// parameters is level 1; the reinforcement target λ is the norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwState {
    pub v: BTreeMap<String, f64>,
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl RwState {
    pub fn new(alpha: f64, beta: f64, lambda: f64) -> Result<Self> {
        for (name, x) in [("alpha", alpha), ("beta", beta)] {
            if !(x > 0.0 && x <= 1.0) {
                return Err(Error::InvalidInput(format!("{name} = {x} outside (0, 1]")));
            }
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda = {lambda} must be >= 0")));
        }
        Ok(Self {
            v: BTreeMap::new(),
            alpha,
            beta,
            lambda,
        })
    }

    pub fn learning_rate(&self) -> f64 {
        self.alpha * self.beta
    }

    pub fn strength(&self, id: &str) -> f64 {
        self.v.get(id).copied().unwrap_or(0.0)
    }

    pub fn set_strength(&mut self, id: &str, value: f64) {
        self.v.insert(id.to_string(), value);
    }

    /// One conditioning trial with a shared prediction error over the presented cues.
    pub fn trial(&mut self, present: &[&str], reinforced: bool) -> Result<()> {
        if present.is_empty() {
            return Err(Error::InvalidInput("empty presentation set".into()));
        }
        let mut cues: Vec<&str> = present.to_vec();
        cues.sort_unstable();
        cues.dedup();
        let target = if reinforced { self.lambda } else { 0.0 };
        let total: f64 = cues.iter().map(|c| self.strength(c)).sum();
        let delta = self.learning_rate() * (target - total);
        for c in cues {
            *self.v.entry(c.to_string()).or_insert(0.0) += delta;
        }
        Ok(())
    }

    pub fn strengths_fingerprint(&self) -> RuleFingerprint {
        let flat: Vec<f64> = self.v.values().copied().collect();
        let keys: Vec<&str> = self.v.keys().map(String::as_str).collect();
        RuleFingerprint::from_reals(0, &format!("V[{}]", keys.join(",")), &flat)
    }

    fn hierarchy(&self) -> Result<FunctionalState> {
        FunctionalState::new(
            0,
            vec![
                self.strengths_fingerprint(),
                RuleFingerprint::from_reals(1, "delta-rule", &[self.alpha, self.beta]),
                RuleFingerprint::from_reals(2, "lambda", &[self.lambda]),
            ],
            vec![true, false, false],
            vec![true, false, false],
        )
    }
}

/// Conditioner that records a level-0 operation for every trial.
#[derive(Debug, Clone)]
pub struct TracedRw {
    pub state: RwState,
    recorder: TraceRecorder,
}

impl TracedRw {
    pub fn new(state: RwState) -> Result<Self> {
        let recorder = TraceRecorder::new(state.hierarchy()?)?;
        Ok(Self { state, recorder })
    }

    pub fn trial(&mut self, present: &[&str], reinforced: bool) -> Result<()> {
        self.state.trial(present, reinforced)?;
        self.recorder.tick(
            vec![self.state.strengths_fingerprint()],
            vec![(LocalOperation::new(0, 2), false)],
        )
    }

    pub fn finish(self) -> Result<(RwState, Trace)> {
        Ok((self.state, self.recorder.finish()?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockingOutcome {
    pub v_a_after_pretrain: f64,
    pub v_b_blocked: f64,
    pub v_b_control: f64,
    /// (V_A, V_B) after every trial of the blocked arm, pretraining included.
    pub blocked_trajectory: Vec<(f64, f64)>,
    pub control_trajectory: Vec<(f64, f64)>,
}

/// Kamin blocking: pretrain A then train AB, against AB-only training.
pub fn run_blocking_experiment(
    template: &RwState,
    pretrain_trials: usize,
    compound_trials: usize,
) -> Result<BlockingOutcome> {
    let mut blocked = RwState::new(template.alpha, template.beta, template.lambda)?;
    let mut blocked_traj = Vec::with_capacity(pretrain_trials + compound_trials);
    for _ in 0..pretrain_trials {
        blocked.trial(&["A"], true)?;
        blocked_traj.push((blocked.strength("A"), blocked.strength("B")));
    }
    let v_a = blocked.strength("A");
    let required = 0.95 * template.lambda;
    if v_a < required {
        return Err(Error::InsufficientPretraining {
            achieved: v_a,
            required,
        });
    }
    for _ in 0..compound_trials {
        blocked.trial(&["A", "B"], true)?;
        blocked_traj.push((blocked.strength("A"), blocked.strength("B")));
    }

    let mut control = RwState::new(template.alpha, template.beta, template.lambda)?;
    let mut control_traj = Vec::with_capacity(compound_trials);
    for _ in 0..compound_trials {
        control.trial(&["A", "B"], true)?;
        control_traj.push((control.strength("A"), control.strength("B")));
    }

    Ok(BlockingOutcome {
        v_a_after_pretrain: v_a,
        v_b_blocked: blocked.strength("B"),
        v_b_control: control.strength("B"),
        blocked_trajectory: blocked_traj,
        control_trajectory: control_traj,
    })
}

/// Single-cue acquisition, 40 reinforced trials.
pub fn canonical_trace() -> Result<Trace> {
    let mut rw = TracedRw::new(RwState::new(0.5, 0.6, 1.0)?)?;
    for _ in 0..40 {
        rw.trial(&["A"], true)?;
    }
    rw.finish().map(|r| r.1)
}
