//! Linear probes on recurrent hidden states and interventions along their direction.

mod data;
mod intervene;
mod linear;

pub use data::{collect_samples, probe_report, ProbeReport, ProbeReportRow, StructureDecoding};
pub use intervene::{
    intervene, intervene_in_place, target_projection, ApplyAt, InterventionMode, InterventionSpec,
};
pub use linear::{
    check_disjoint, fit_probe, split_by_episode, train_probe, ClassMeans, LinearProbe,
    ProbeConfig, ProbeSample,
};
