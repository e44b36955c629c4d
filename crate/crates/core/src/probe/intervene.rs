use serde::{Deserialize, Serialize};

use super::linear::LinearProbe;
use crate::error::{Error, Result};
use crate::planning::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InterventionMode {
    None,
    PerturbToWrong,
    RestoreToCorrect,
}

impl InterventionMode {
    pub fn tag(self) -> &'static str {
        match self {
            InterventionMode::None => "none",
            InterventionMode::PerturbToWrong => "perturb_to_wrong",
            InterventionMode::RestoreToCorrect => "restore_to_correct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplyAt {
    /// Decision points at which some node is still uninspected.
    InspectionDecisions,
    AllDecisions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterventionSpec {
    pub mode: InterventionMode,
    pub strength: f64,
    pub apply_at: ApplyAt,
}

impl Default for InterventionSpec {
    fn default() -> Self {
        Self {
            mode: InterventionMode::None,
            strength: 1.0,
            apply_at: ApplyAt::InspectionDecisions,
        }
    }
}

impl InterventionSpec {
    pub fn new(mode: InterventionMode, strength: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&strength) {
            return Err(Error::InvalidInput(format!(
                "intervention strength {strength} outside [0, 1]"
            )));
        }
        Ok(Self {
            mode,
            strength,
            ..Self::default()
        })
    }

    pub fn applies(&self, can_inspect: bool) -> bool {
        self.mode != InterventionMode::None
            && (can_inspect || self.apply_at == ApplyAt::AllDecisions)
    }
}

/// Class-mean projection the intervention pushes toward, given the behaviourally correct label.
pub fn target_projection(probe: &LinearProbe, spec: &InterventionSpec, correct: Strategy) -> Option<f64> {
    match spec.mode {
        InterventionMode::None => None,
        InterventionMode::PerturbToWrong => probe.class_means.of(correct.opposite()),
        InterventionMode::RestoreToCorrect => probe.class_means.of(correct),
    }
}

/// `h' = h + s (m_target − w·h) w`; only the component along `w` moves.
pub fn intervene_in_place(h: &mut [f64], probe: &LinearProbe, spec: &InterventionSpec, correct: Strategy) {
    let Some(m) = target_projection(probe, spec, correct) else {
        return;
    };
    let k = spec.strength * (m - probe.projection(h));
    for (hi, wi) in h.iter_mut().zip(&probe.weight) {
        *hi += k * wi;
    }
}

pub fn intervene(h: &[f64], probe: &LinearProbe, spec: &InterventionSpec, correct: Strategy) -> Vec<f64> {
    let mut out = h.to_vec();
    intervene_in_place(&mut out, probe, spec, correct);
    out
}
