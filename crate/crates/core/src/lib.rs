//! A laboratory for rule-hierarchy self-modification.
//!
//! The crate houses a small calculus over rule hierarchies (functional
//! states, representation and causal-access masks, regime classification,
//! causal closure), one concrete agent per regime, a Mouselab-style planning
//! task, a recurrent meta-RL agent with hand-written backpropagation through
//! time, linear probes with activation interventions, and the harness that
//! runs the five-phase probe-and-intervene protocol.

pub mod agents;
pub mod error;
pub mod harness;
pub mod hierarchy;
pub mod metarl;
pub mod planning;
pub mod probe;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use hierarchy::{
    check_causal_closure, classify_regime, diff_states, profile_of, AgentKind, FunctionalState,
    Regime, RegimeLabel, RuleFingerprint, Trace,
};
