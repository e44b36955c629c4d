use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::hierarchy::{FunctionalState, LocalOperation, RuleFingerprint, Trace, TraceRecorder};
use crate::rng::{seeded, Rng};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    Color,
    Shape,
    Number,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Color, Criterion::Shape, Criterion::Number];

    /// Next criterion in the fixed cycle color → shape → number → color.
    pub fn next(self) -> Self {
        match self {
            Criterion::Color => Criterion::Shape,
            Criterion::Shape => Criterion::Number,
            Criterion::Number => Criterion::Color,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::Color => "color",
            Criterion::Shape => "shape",
            Criterion::Number => "number",
        })
    }
}

/// Stimulus card; each feature takes one of four values, one per key pile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Card {
    pub color: u8,
    pub shape: u8,
    pub number: u8,
}

impl Card {
    pub fn feature(&self, c: Criterion) -> u8 {
        match c {
            Criterion::Color => self.color,
            Criterion::Shape => self.shape,
            Criterion::Number => self.number,
        }
    }

    /// Every criterion points to a different pile, so feedback names a unique rule.
    pub fn is_informative(&self) -> bool {
        self.color != self.shape && self.shape != self.number && self.color != self.number
    }
}

/// Draws only informative cards.
#[derive(Debug, Clone)]
pub struct Deck {
    rng: Rng,
}

impl Deck {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: seeded(seed, &[0x57C5, 1]),
        }
    }

    pub fn draw(&mut self) -> Card {
        let color = self.rng.gen_range(0..4u8);
        let mut shape = self.rng.gen_range(0..3u8);
        if shape >= color {
            shape += 1;
        }
        let (lo, hi) = (color.min(shape), color.max(shape));
        let mut number = self.rng.gen_range(0..2u8);
        if number >= lo {
            number += 1;
        }
        if number >= hi {
            number += 1;
        }
        Card { color, shape, number }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwitchPolicy {
    Cycle,
    SeededRandom,
}

#[derive(Debug, Clone)]
pub struct WcstAgent {
    pub active_rule: Criterion,
    pub switch_threshold: u32,
    pub negative_streak: u32,
    pub lesioned: bool,
    pub switch_policy: SwitchPolicy,
    rng: Rng,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    /// Pile index the card was placed on.
    pub response: u8,
    pub rule_used: Criterion,
    pub positive: bool,
    /// New active rule when the meta-rule fired on this trial.
    pub switched_to: Option<Criterion>,
}

impl WcstAgent {
    pub fn new(initial: Criterion, switch_threshold: u32, lesioned: bool, seed: u64) -> Self {
        Self {
            active_rule: initial,
            switch_threshold: switch_threshold.max(1),
            negative_streak: 0,
            lesioned,
            switch_policy: SwitchPolicy::Cycle,
            rng: seeded(seed, &[0x57C5, 2]),
        }
    }

    pub fn with_switch_policy(mut self, policy: SwitchPolicy) -> Self {
        self.switch_policy = policy;
        self
    }

    /// Sorts one card by the active rule and applies the feedback.
    pub fn trial(&mut self, card: Card, correct: Criterion) -> TrialOutcome {
        let rule_used = self.active_rule;
        let response = card.feature(rule_used);
        let positive = card.feature(correct) == response;
        let mut switched_to = None;
        if positive {
            self.negative_streak = 0;
        } else {
            self.negative_streak += 1;
            if self.negative_streak >= self.switch_threshold && !self.lesioned {
                let next = match self.switch_policy {
                    SwitchPolicy::Cycle => rule_used.next(),
                    SwitchPolicy::SeededRandom => {
                        if self.rng.gen_bool(0.5) {
                            rule_used.next()
                        } else {
                            rule_used.next().next()
                        }
                    }
                };
                self.active_rule = next;
                self.negative_streak = 0;
                switched_to = Some(next);
            }
        }
        TrialOutcome {
            response,
            rule_used,
            positive,
            switched_to,
        }
    }

    fn rule_fingerprint(&self) -> RuleFingerprint {
        RuleFingerprint::symbolic(1, &format!("sort-by:{}", self.active_rule))
    }

    fn hierarchy(&self) -> Result<FunctionalState> {
        let meta = if self.lesioned {
            "switch:disabled".to_string()
        } else {
            format!("switch-after:{}", self.switch_threshold)
        };
        FunctionalState::new(
            0,
            vec![
                RuleFingerprint::symbolic(0, "place-on-matching-pile"),
                self.rule_fingerprint(),
                RuleFingerprint::symbolic(2, &meta),
                RuleFingerprint::symbolic(3, "maximize-correct-sorts"),
            ],
            vec![false, true, false, false],
            vec![true, !self.lesioned, false, false],
        )
    }
}

/// One criterion shift, unsignaled to the agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub initial: Criterion,
    /// Number of trials run under `initial`; the shift takes effect on the next trial.
    pub shift_after: usize,
    pub shifted: Criterion,
    pub total: usize,
}

impl Schedule {
    pub fn criterion_at(&self, trial: usize) -> Criterion {
        if trial <= self.shift_after {
            self.initial
        } else {
            self.shifted
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    /// 1-based trial number.
    pub trial: usize,
    pub correct: Criterion,
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone)]
pub struct Session {
    pub schedule: Schedule,
    pub trials: Vec<TrialRecord>,
    pub trace: Trace,
}

impl Session {
    fn post_shift(&self) -> &[TrialRecord] {
        &self.trials[self.schedule.shift_after.min(self.trials.len())..]
    }

    /// Fraction of the first `window` post-shift trials sorted by the old criterion.
    pub fn perseveration_rate(&self, window: usize) -> f64 {
        let post: Vec<_> = self.post_shift().iter().take(window).collect();
        if post.is_empty() {
            return 0.0;
        }
        let old = self.schedule.initial;
        post.iter().filter(|r| r.outcome.rule_used == old).count() as f64 / post.len() as f64
    }

    /// Post-shift trial index (1-based) of the first correct sort.
    pub fn trials_to_reacquire(&self) -> Option<usize> {
        self.post_shift()
            .iter()
            .position(|r| r.outcome.positive)
            .map(|i| i + 1)
    }

    /// Absolute trial numbers at which the active rule changed.
    pub fn rule_changes(&self) -> Vec<usize> {
        self.trials
            .iter()
            .filter(|r| r.outcome.switched_to.is_some())
            .map(|r| r.trial)
            .collect()
    }

    /// Post-shift trial index (1-based) of the first rule change.
    pub fn first_switch_after_shift(&self) -> Option<usize> {
        self.post_shift()
            .iter()
            .position(|r| r.outcome.switched_to.is_some())
            .map(|i| i + 1)
    }
}

/// Runs a full session, recording a level-1 event for every rule change.
pub fn run_session(mut agent: WcstAgent, schedule: Schedule, deck_seed: u64) -> Result<Session> {
    let mut deck = Deck::new(deck_seed);
    let mut rec = TraceRecorder::new(agent.hierarchy()?)?;
    let mut trials = Vec::with_capacity(schedule.total);
    for trial in 1..=schedule.total {
        let correct = schedule.criterion_at(trial);
        let outcome = agent.trial(deck.draw(), correct);
        if outcome.switched_to.is_some() {
            rec.tick(
                vec![agent.rule_fingerprint()],
                vec![(LocalOperation::new(1, 2), false)],
            )?;
        } else {
            rec.tick(vec![], vec![])?;
        }
        trials.push(TrialRecord {
            trial,
            correct,
            outcome,
        });
    }
    Ok(Session {
        schedule,
        trials,
        trace: rec.finish()?,
    })
}

pub const DEFAULT_SCHEDULE: Schedule = Schedule {
    initial: Criterion::Color,
    shift_after: 50,
    shifted: Criterion::Shape,
    total: 80,
};

pub fn canonical_trace(lesioned: bool) -> Result<Trace> {
    let agent = WcstAgent::new(Criterion::Color, 3, lesioned, 0);
    run_session(agent, DEFAULT_SCHEDULE, 0).map(|s| s.trace)
}
