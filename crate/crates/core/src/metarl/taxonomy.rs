use serde::{Deserialize, Serialize};

use crate::planning::{EpisodeLog, Strategy};

/// Episodes needed after a shift to reach criterion; `None` when censored at `cap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptationMetric {
    pub trials_to_criterion: Option<usize>,
    pub cap: usize,
}

impl AdaptationMetric {
    pub fn censored(&self) -> bool {
        self.trials_to_criterion.is_none()
    }

    /// Value used for rank comparisons: censored runs sit just above the cap.
    pub fn rank_value(&self) -> f64 {
        self.trials_to_criterion.unwrap_or(self.cap + 1) as f64
    }
}

/// First episode count at which the trailing `window` mean reaches `threshold`.
pub fn trials_to_criterion(payoffs: &[f64], threshold: f64, window: usize) -> AdaptationMetric {
    let w = window.max(1);
    let mut acc = 0.0;
    let mut hit = None;
    for (i, p) in payoffs.iter().enumerate() {
        acc += p;
        if i >= w {
            acc -= payoffs[i - w];
        }
        if i + 1 >= w && acc / w as f64 >= threshold {
            hit = Some(i + 1);
            break;
        }
    }
    AdaptationMetric {
        trials_to_criterion: hit,
        cap: payoffs.len(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub perseveration: usize,
    pub exploration: usize,
    pub other: usize,
}

impl std::ops::AddAssign for ErrorCounts {
    fn add_assign(&mut self, o: Self) {
        self.perseveration += o.perseveration;
        self.exploration += o.exploration;
        self.other += o.other;
    }
}

/// Classifies below-criterion post-shift episodes.
///
/// An unclassified episode, or one whose label differs from the previous
/// episode's, is an exploration error; otherwise keeping the pre-shift label
/// is perseveration; anything else below criterion is `other`.
pub fn error_taxonomy(
    logs: &[EpisodeLog],
    labels: &[Strategy],
    previous: Option<Strategy>,
    pre_shift: Strategy,
    criterion: f64,
) -> ErrorCounts {
    let mut counts = ErrorCounts::default();
    let mut prev = previous;
    for (log, &label) in logs.iter().zip(labels) {
        if log.payoff < criterion {
            let changed = prev.is_some_and(|p| p != label);
            if label == Strategy::Unclassified || changed {
                counts.exploration += 1;
            } else if label == pre_shift {
                counts.perseveration += 1;
            } else {
                counts.other += 1;
            }
        }
        prev = Some(label);
    }
    counts
}
