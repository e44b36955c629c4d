//! Classical anchors for regimes 1 to 3.

pub mod automaton;
pub mod dissociation;
pub mod gradient_descent;
pub mod rescorla_wagner;
pub mod wcst;

pub use automaton::FixedAutomaton;
pub use dissociation::{run_dissociation, DissociationReport, DissociationRow};
pub use gradient_descent::{GdState, Loss, Sample};
pub use rescorla_wagner::{run_blocking_experiment, BlockingOutcome, RwState};
pub use wcst::{Card, Criterion, WcstAgent};
