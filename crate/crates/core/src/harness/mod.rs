//! Five-phase probe-and-intervene protocol, condition statistics, the norm
//! sandbox, and the suite runner behind the command line.

mod compare;
mod config;
mod protocol;
mod sandbox;
mod suite;

pub use compare::{
    compare_conditions, structured_vs_null_effect, BootstrapSettings, ConditionSummary,
    InteractionReport, OrderingReport, PairwiseDifference, Verdict,
};
pub use config::{
    Condition, CriterionConfig, InterventionConfig, PhaseBudgets, ProtocolConfig, StructureFactor,
};
pub use protocol::{
    criterion_threshold, prepare_seed, run_cell, run_protocol, write_results_csv, CellRun, Phase,
    PhaseChecksums, PolicySource, ProtocolResult, ProtocolRun, SeedFailure,
};
pub use sandbox::{
    conservatism_grid, norm_greedy_episode, run_conservatism_grid, sandbox_revision, NormVector,
    SandboxRecord,
};
pub use suite::{
    run_all, suite_blocking, suite_competence, suite_dissociation, suite_probe, suite_protocol,
    suite_regime, suite_sandbox, Artifacts, Check, CompetenceConfig, PolicyCache, Report,
    SandboxConfig, SuiteConfig, SuiteReport, SUITES,
};
