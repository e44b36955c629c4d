//! Rule hierarchies, their traces, and the decision procedures over them.

mod jsonl;
mod profile;
mod regime;
mod state;
mod trace;

pub use jsonl::{read_trace, trace_from_str, trace_to_string, write_trace};
pub use profile::{profile_of, AgentKind, Autonomy, CapabilityProfile, LevelProfile};
pub use regime::{
    check_causal_closure, classify_regime, ClosureReport, ClosureViolation, Regime, RegimeLabel,
    UnrepresentedNormChange,
};
pub use state::{canonical_real, diff_states, FunctionalState, ProjectionOperator, RuleFingerprint};
pub use trace::{LocalOperation, Trace, TraceEvent, TraceRecorder};
