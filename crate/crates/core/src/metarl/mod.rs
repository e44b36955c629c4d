//! Recurrent meta-RL agent: gated recurrent cell, BPTT, REINFORCE training.

mod checkpoint;
mod gradcheck;
mod policy;
mod rollout;
mod taxonomy;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use gradcheck::{batch_surrogate, gradient_check, sample_batch, GradCheckReport, RELATIVE_FLOOR};
pub use policy::{entropy, masked_softmax, Block, Layout, RecurrentPolicy, StepCache};
pub use rollout::{evaluate_policy, evaluate_random, held_out_tree, rollout, HiddenHook, Rollout, Sampling};
pub use taxonomy::{error_taxonomy, trials_to_criterion, AdaptationMetric, ErrorCounts};
pub use train::{
    batch_gradient, meta_rl_hierarchy, moving_average, new_policy, surrogate_dlogits,
    surrogate_value, train, training_structure, write_curve_csv, Adam, Baseline, CurvePoint,
    TrainOutcome, TrainingConfig,
};
