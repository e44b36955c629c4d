//! Mouselab-style inspect-then-commit planning trees with a latent structure.

mod episode;
mod scripted;
mod strategy;
mod tree;

pub use episode::{
    action_dim, observation_dim, read_logs, write_logs, Action, Episode, EpisodeLog, LoggedAction,
    StepOutcome,
};
pub use scripted::{
    optimal_strategy, optimal_strategy_payoff_gap, play_far, play_near, play_random,
    play_strategy, random_policy_payoff, scripted_mean_payoff,
};
pub use strategy::{classify_episode, classify_strategy, deep_threshold, Strategy, StrategyLabel};
pub use tree::{generate_tree, PlanningTree, Scales, Structure, TreeConfig};
