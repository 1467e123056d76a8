//! Strategy labels, scripted reference strategies, empirical payoff
//! matrices and pure-strategy equilibria.

mod classify;
mod nash;
mod payoff;
mod report;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classify::{classify, Label, StrategyLabel};
pub use nash::{pure_nash, CellArrows, Deviation, Equilibrium, NashResult};
pub use payoff::{empirical_payoff, empirical_payoff_with, PayoffMatrix, ReturnKind, RewardOrdering};
pub use report::{asymmetry_report, AsymmetryReport, SeedLabels};
pub use scripted::{scripted_strategy, ScriptedPolicy};

use crate::rollout::RolloutError;

/// The two pure strategies of the crossing game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    Straight,
    Avoid,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Straight, Strategy::Avoid];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn other(self) -> Strategy {
        match self {
            Strategy::Straight => Strategy::Avoid,
            Strategy::Avoid => Strategy::Straight,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Straight => "straight",
            Strategy::Avoid => "avoid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("agent index {0} out of range")]
    AgentIndex(usize),
    #[error("no seeds to report on")]
    Empty,
    #[error("episodes_per_cell must be at least 1")]
    NoEpisodes,
    #[error("trajectory has no steps")]
    EmptyTrajectory,
    #[error(transparent)]
    Rollout(#[from] RolloutError),
}
