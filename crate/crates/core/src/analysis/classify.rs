use serde::{Deserialize, Serialize};

use super::AnalysisError;
use crate::gridworld::{shortest_path_len, Action, AgentStatus, ScenarioConfig};
use crate::rollout::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Straight,
    Avoid,
    Collide,
    Fail,
}

impl Label {
    pub fn name(self) -> &'static str {
        match self {
            Label::Straight => "straight",
            Label::Avoid => "avoid",
            Label::Collide => "collide",
            Label::Fail => "fail",
        }
    }

    pub fn parse(s: &str) -> Option<Label> {
        [Label::Straight, Label::Avoid, Label::Collide, Label::Fail]
            .into_iter()
            .find(|l| l.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyLabel {
    pub label: Label,
    /// Moves beyond the shortest path (including waits).
    pub extra_steps: u32,
    pub waited: bool,
}

/// Labels one agent's behaviour in a finished episode.
///
/// Straight means the goal was reached in exactly the shortest-path number
/// of moves, which leaves no room for waits or detours. Any other
/// goal-reaching path is Avoid.
pub fn classify(
    traj: &Trajectory,
    agent: usize,
    config: &ScenarioConfig,
) -> Result<StrategyLabel, AnalysisError> {
    if agent >= 2 {
        return Err(AnalysisError::AgentIndex(agent));
    }
    let start = traj.steps.first().ok_or(AnalysisError::EmptyTrajectory)?;
    let spawn = start.state.pos[agent].ok_or(AnalysisError::EmptyTrajectory)?;
    let shortest = shortest_path_len(spawn, config.target_edge[agent], config);
    let moves = traj.path_len(agent) as u32;
    let waited = traj.actions_of(agent).any(|a| a == Action::Stay);
    let extra_steps = moves.saturating_sub(shortest);
    let label = match traj.final_state.status[agent] {
        AgentStatus::ReachedGoal if moves == shortest => Label::Straight,
        AgentStatus::ReachedGoal => Label::Avoid,
        AgentStatus::Collided => Label::Collide,
        _ => Label::Fail,
    };
    Ok(StrategyLabel {
        label,
        extra_steps,
        waited,
    })
}
