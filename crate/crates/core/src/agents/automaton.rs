use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hierarchy::{FunctionalState, RuleFingerprint, Trace, TraceRecorder};

pub type StateId = u32;
pub type Symbol = u32;

/// Finite automaton whose transition table never changes after construction.
#[derive(Debug, Clone)]
pub struct FixedAutomaton {
    table: BTreeMap<(StateId, Symbol), (StateId, Symbol)>,
    current: StateId,
}

impl FixedAutomaton {
    pub fn new(
        table: BTreeMap<(StateId, Symbol), (StateId, Symbol)>,
        initial: StateId,
    ) -> Result<Self> {
        if table.is_empty() {
            return Err(Error::InvalidInput("empty transition table".into()));
        }
        Ok(Self {
            table,
            current: initial,
        })
    }

    /// Two-state thermostat: stimulus 0 = cold, 1 = hot; response 1 = heat on.
    pub fn thermostat() -> Self {
        let table = BTreeMap::from([
            ((0, 0), (1, 1)),
            ((0, 1), (0, 0)),
            ((1, 0), (1, 1)),
            ((1, 1), (0, 0)),
        ]);
        Self { table, current: 0 }
    }

    pub fn current_state(&self) -> StateId {
        self.current
    }

    pub fn step(&mut self, stimulus: Symbol) -> Result<Symbol> {
        let &(next, response) = self.table.get(&(self.current, stimulus)).ok_or_else(|| {
            Error::InvalidInput(format!(
                "no transition from state {} on stimulus {stimulus}",
                self.current
            ))
        })?;
        self.current = next;
        Ok(response)
    }

    pub fn table_fingerprint(&self) -> RuleFingerprint {
        let flat: Vec<f64> = self
            .table
            .iter()
            .flat_map(|(&(s, x), &(n, r))| [s as f64, x as f64, n as f64, r as f64])
            .collect();
        RuleFingerprint::from_reals(0, "transition-table", &flat)
    }

    fn initial_state(&self) -> Result<FunctionalState> {
        FunctionalState::new(
            0,
            vec![
                self.table_fingerprint(),
                RuleFingerprint::symbolic(1, "implicit norm"),
            ],
            vec![false, false],
            vec![false, false],
        )
    }

    /// Runs a stimulus sequence and records one snapshot per step.
    pub fn run_traced(&mut self, stimuli: &[Symbol]) -> Result<(Vec<Symbol>, Trace)> {
        let mut rec = TraceRecorder::new(self.initial_state()?)?;
        let mut out = Vec::with_capacity(stimuli.len());
        for &s in stimuli {
            out.push(self.step(s)?);
            rec.tick(vec![self.table_fingerprint()], vec![])?;
        }
        Ok((out, rec.finish()?))
    }
}

/// Thermostat driven by an alternating cold/hot sequence.
pub fn canonical_trace() -> Result<Trace> {
    let stimuli: Vec<Symbol> = (0..20).map(|i| (i / 3 % 2) as Symbol).collect();
    FixedAutomaton::thermostat().run_traced(&stimuli).map(|r| r.1)
}
