//! Independent Q-learners: an exact tabular learner for small grids and a
//! deep Q-network learner fed with stacked image planes.

mod dqn;
mod policy;
mod qtable;
mod replay;
mod schedule;

use thiserror::Error;

pub use dqn::{DqnAgent, DqnParams, DqnTransition, ReplayKind, TrainOutcome};
pub use policy::{argmax, epsilon_greedy, select_action, TieBreak};
pub use qtable::{straight_line_value, td_update, QTable, StateKey, TabularAgent, TabularParams, TabularTransition};
pub use replay::{ReplayBuffer, SumTree};
pub use schedule::EpsilonSchedule;

use crate::gridworld::{ConfigError, StepError};
use crate::numerics::NumericError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("Q-table with {entries} entries exceeds the supported size")]
    TableTooLarge { entries: usize },
    #[error("invalid hyperparameter: {0}")]
    Hyperparameter(&'static str),
}
