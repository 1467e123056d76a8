//! The two-agent crossing game.
//!
//! Moves are simultaneous. An agent wins by stepping across its target
//! edge; stepping across any other edge is a wrong exit. Two active agents
//! that land on the same cell, or swap cells, collide and end the episode.
//! Agents that have exited are removed from the grid and receive zero reward
//! for the rest of the episode.

mod config;
pub mod observe;
pub mod symmetry;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{ConfigError, Edge, RewardSpec, Scenario, ScenarioConfig};
pub use observe::{encode_frame, observe, Frame, FrameHistory, Observation};
pub use symmetry::{mirror_actions, mirror_outcome, mirror_state, Isometry};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn shifted(self, (dx, dy): (i32, i32)) -> Self {
        Cell::new(self.x + dx, self.y + dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
}

impl Action {
    pub const COUNT: usize = 5;
    pub const ALL: [Action; 5] = [
        Action::Up,
        Action::Down,
        Action::Left,
        Action::Right,
        Action::Stay,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Action> {
        Action::ALL.get(index).copied()
    }

    /// Grid displacement; `Up` moves toward the north edge (`y - 1`).
    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
            Action::Stay => (0, 0),
        }
    }

    pub fn from_delta(delta: (i32, i32)) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.delta() == delta)
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::Stay => "stay",
        }
    }

    pub fn parse(s: &str) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AgentStatus {
    Active,
    ReachedGoal,
    WrongExit,
    Collided,
    TimedOut,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Event {
    None,
    Goal,
    Collision,
    WrongExit,
    Timeout,
}

impl Event {
    pub fn name(self) -> &'static str {
        match self {
            Event::None => "none",
            Event::Goal => "goal",
            Event::Collision => "collision",
            Event::WrongExit => "wrong_exit",
            Event::Timeout => "timeout",
        }
    }

    pub fn parse(s: &str) -> Option<Event> {
        [
            Event::None,
            Event::Goal,
            Event::Collision,
            Event::WrongExit,
            Event::Timeout,
        ]
        .into_iter()
        .find(|e| e.name() == s)
    }
}

/// Positions (`None` once exited), frame index and per-agent status.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JointState {
    pub pos: [Option<Cell>; 2],
    pub t: u32,
    pub status: [AgentStatus; 2],
}

impl JointState {
    pub fn is_active(&self, agent: usize) -> bool {
        self.status[agent] == AgentStatus::Active
    }

    pub fn is_terminal(&self) -> bool {
        !self.is_active(0) && !self.is_active(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub next: JointState,
    pub reward: [f64; 2],
    pub terminal: bool,
    pub events: [Event; 2],
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("step called on a terminal state")]
    EpisodeOver,
}

/// The initial state: both agents active at their spawns.
pub fn reset(config: &ScenarioConfig) -> Result<JointState, ConfigError> {
    config.validate()?;
    Ok(JointState {
        pos: [Some(config.spawn[0]), Some(config.spawn[1])],
        t: 0,
        status: [AgentStatus::Active; 2],
    })
}

/// Edge crossed by a tentative out-of-grid position.
fn crossed_edge(cell: Cell, config: &ScenarioConfig) -> Option<Edge> {
    if cell.x < 0 {
        Some(Edge::West)
    } else if cell.x >= config.width as i32 {
        Some(Edge::East)
    } else if cell.y < 0 {
        Some(Edge::North)
    } else if cell.y >= config.height as i32 {
        Some(Edge::South)
    } else {
        None
    }
}

pub fn step(
    state: &JointState,
    actions: [Action; 2],
    config: &ScenarioConfig,
) -> Result<StepOutcome, StepError> {
    if state.is_terminal() {
        return Err(StepError::EpisodeOver);
    }
    let r = &config.reward;
    let mut next = state.clone();
    let mut reward = [0.0; 2];
    let mut events = [Event::None; 2];

    let tentative: [Option<Cell>; 2] = core::array::from_fn(|i| {
        if state.is_active(i) {
            state.pos[i].map(|c| c.shifted(actions[i].delta()))
        } else {
            None
        }
    });

    let mut in_grid = [false; 2];
    for i in 0..2 {
        let Some(cell) = tentative[i] else { continue };
        match crossed_edge(cell, config) {
            Some(edge) if edge == config.target_edge[i] => {
                events[i] = Event::Goal;
                reward[i] = r.r_goal;
                next.status[i] = AgentStatus::ReachedGoal;
                next.pos[i] = None;
            }
            Some(_) => {
                events[i] = Event::WrongExit;
                reward[i] = r.r_wrong;
                next.status[i] = AgentStatus::WrongExit;
                next.pos[i] = None;
            }
            None => in_grid[i] = true,
        }
    }

    if in_grid[0] && in_grid[1] {
        let (a, b) = (tentative[0].unwrap(), tentative[1].unwrap());
        let swapped = Some(a) == state.pos[1] && Some(b) == state.pos[0];
        if a == b || swapped {
            for i in 0..2 {
                events[i] = Event::Collision;
                reward[i] = r.r_collide;
                next.status[i] = AgentStatus::Collided;
                next.pos[i] = tentative[i];
            }
            next.t = state.t + 1;
            return Ok(StepOutcome {
                next,
                reward,
                terminal: true,
                events,
            });
        }
    }

    next.t = state.t + 1;
    for i in 0..2 {
        if in_grid[i] {
            next.pos[i] = tentative[i];
            reward[i] = r.r_step;
            if next.t >= config.max_steps {
                events[i] = Event::Timeout;
                next.status[i] = AgentStatus::TimedOut;
            }
        }
    }
    let terminal = next.is_terminal();
    Ok(StepOutcome {
        next,
        reward,
        terminal,
        events,
    })
}

/// Number of moves needed to cross `target` from `spawn`, ignoring the other agent.
pub fn shortest_path_len(spawn: Cell, target: Edge, config: &ScenarioConfig) -> u32 {
    let (w, h) = (config.width as i32, config.height as i32);
    let d = match target {
        Edge::East => w - spawn.x,
        Edge::West => spawn.x + 1,
        Edge::North => spawn.y + 1,
        Edge::South => h - spawn.y,
    };
    d as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    fn parallel9() -> ScenarioConfig {
        ScenarioConfig::square(Scenario::Parallel, 9).unwrap()
    }

    #[test]
    fn reset_places_agents_at_midpoint_spawns() {
        let c = parallel9();
        let s = reset(&c).unwrap();
        assert_eq!(s.pos, [Some(Cell::new(0, 4)), Some(Cell::new(8, 4))]);
        assert_eq!(c.target_edge, [Edge::East, Edge::West]);
        assert_eq!(s.t, 0);
        assert_eq!(s.status, [AgentStatus::Active; 2]);

        let c = ScenarioConfig::square(Scenario::Perpendicular, 9).unwrap();
        let s = reset(&c).unwrap();
        assert_eq!(s.pos, [Some(Cell::new(0, 4)), Some(Cell::new(4, 0))]);
        assert_eq!(c.target_edge, [Edge::East, Edge::South]);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert_eq!(
            ScenarioConfig::new(Scenario::Parallel, 3, 9).unwrap_err(),
            ConfigError::GridTooSmall {
                width: 3,
                height: 9
            }
        );
        assert!(matches!(
            ScenarioConfig::new(Scenario::Perpendicular, 9, 11),
            Err(ConfigError::NotSquare { .. })
        ));
        let mut c = parallel9();
        c.spawn[0] = Cell::new(1, 4);
        assert!(matches!(
            reset(&c),
            Err(ConfigError::SpawnNotOpposite { agent: 0, .. })
        ));
        let mut c = parallel9();
        c.spawn[1] = Cell::new(9, 4);
        assert!(matches!(
            c.validate(),
            Err(ConfigError::SpawnOutsideGrid { agent: 1, .. })
        ));
        let mut c = parallel9();
        c.spawn[1] = Cell::new(8, 3);
        assert_eq!(c.validate(), Err(ConfigError::ParallelLanes));
        let mut c = ScenarioConfig::square(Scenario::Perpendicular, 9).unwrap();
        c.spawn[0] = Cell::new(0, 3);
        assert_eq!(c.validate(), Err(ConfigError::Asymmetric));
        let mut c = parallel9();
        c.max_steps = 35;
        assert!(matches!(
            c.validate(),
            Err(ConfigError::MaxStepsTooSmall { min: 36, .. })
        ));
        let mut c = parallel9();
        c.reward.r_step = -0.05;
        assert!(matches!(
            c.validate(),
            Err(ConfigError::StepPenaltyDominates { .. })
        ));
        let mut c = parallel9();
        c.reward.r_collide = 0.5;
        assert!(matches!(
            c.validate(),
            Err(ConfigError::RewardSign {
                name: "r_collide",
                ..
            })
        ));
        let mut c = parallel9();
        c.reward.gamma = 1.0;
        assert_eq!(c.validate(), Err(ConfigError::Gamma(1.0)));
    }

    #[test]
    fn large_grids_scale_the_step_penalty() {
        let c = ScenarioConfig::square(Scenario::Parallel, 64).unwrap();
        assert_eq!(c.max_steps, 272);
        assert_eq!(c.reward.r_step, -0.001);
        let c = ScenarioConfig::square(Scenario::Parallel, 17).unwrap();
        assert_eq!(c.reward.r_step, -0.01);
    }

    #[test]
    fn straight_versus_straight_collides_at_the_centre() {
        let c = parallel9();
        let mut s = reset(&c).unwrap();
        let mut log = Vec::new();
        for _ in 0..4 {
            let out = step(&s, [Action::Right, Action::Left], &c).unwrap();
            log.push(out.clone());
            s = out.next;
        }
        for out in &log[..3] {
            assert!(!out.terminal);
            assert_eq!(out.reward, [-0.01, -0.01]);
        }
        let last = &log[3];
        assert!(last.terminal);
        assert_eq!(last.events, [Event::Collision; 2]);
        assert_eq!(last.reward, [-1.0, -1.0]);
        assert_eq!(last.next.pos, [Some(Cell::new(4, 4)); 2]);
        assert_eq!(last.next.t, 4);
    }

    #[test]
    fn crossing_target_edge_is_a_goal_and_other_edges_are_wrong_exits() {
        let c = parallel9();
        let s = JointState {
            pos: [Some(Cell::new(8, 4)), Some(Cell::new(4, 0))],
            t: 3,
            status: [AgentStatus::Active; 2],
        };
        let out = step(&s, [Action::Right, Action::Stay], &c).unwrap();
        assert_eq!(out.events[0], Event::Goal);
        assert_eq!(out.reward[0], 1.0);
        assert_eq!(out.next.pos[0], None);
        assert_eq!(out.next.status[0], AgentStatus::ReachedGoal);
        assert!(!out.terminal);

        let s = reset(&c).unwrap();
        let out = step(&s, [Action::Left, Action::Stay], &c).unwrap();
        assert_eq!(out.events[0], Event::WrongExit);
        assert_eq!(out.reward[0], -1.0);
        assert_eq!(out.reward[1], -0.01);

        // agent 1 walks out the north edge from the top row
        let s = JointState {
            pos: [Some(Cell::new(2, 2)), Some(Cell::new(4, 0))],
            t: 0,
            status: [AgentStatus::Active; 2],
        };
        let out = step(&s, [Action::Stay, Action::Up], &c).unwrap();
        assert_eq!(out.events[1], Event::WrongExit);
    }

    #[test]
    fn swapping_cells_is_a_collision() {
        let c = parallel9();
        let s = JointState {
            pos: [Some(Cell::new(3, 4)), Some(Cell::new(4, 4))],
            t: 3,
            status: [AgentStatus::Active; 2],
        };
        let out = step(&s, [Action::Right, Action::Left], &c).unwrap();
        assert!(out.terminal);
        assert_eq!(out.events, [Event::Collision; 2]);
        // walking into a waiting agent collides as well
        let out = step(&s, [Action::Right, Action::Stay], &c).unwrap();
        assert_eq!(out.events, [Event::Collision; 2]);
        // following one another does not
        let out = step(&s, [Action::Right, Action::Right], &c).unwrap();
        assert_eq!(out.events, [Event::None; 2]);
    }

    #[test]
    fn exited_agents_receive_nothing_and_actions_are_ignored() {
        let c = parallel9();
        let s = JointState {
            pos: [None, Some(Cell::new(4, 4))],
            t: 5,
            status: [AgentStatus::ReachedGoal, AgentStatus::Active],
        };
        let out = step(&s, [Action::Left, Action::Up], &c).unwrap();
        assert_eq!(out.reward[0], 0.0);
        assert_eq!(out.events[0], Event::None);
        assert_eq!(out.next.pos[0], None);
        assert_eq!(out.next.pos[1], Some(Cell::new(4, 3)));
    }

    #[test]
    fn timeout_at_max_steps() {
        let c = parallel9();
        let mut s = reset(&c).unwrap();
        let mut ret = [0.0; 2];
        let mut steps = 0;
        loop {
            let out = step(&s, [Action::Stay, Action::Stay], &c).unwrap();
            steps += 1;
            ret[0] += out.reward[0];
            ret[1] += out.reward[1];
            if out.terminal {
                assert_eq!(out.events, [Event::Timeout; 2]);
                assert_eq!(out.next.status, [AgentStatus::TimedOut; 2]);
                s = out.next;
                break;
            }
            s = out.next;
        }
        assert_eq!(steps, c.max_steps);
        assert_eq!(s.t, c.max_steps);
        assert!(matches!(
            step(&s, [Action::Stay; 2], &c),
            Err(StepError::EpisodeOver)
        ));
    }

    #[test]
    fn shortest_path_lengths() {
        let c = parallel9();
        assert_eq!(shortest_path_len(Cell::new(0, 4), Edge::East, &c), 9);
        assert_eq!(shortest_path_len(Cell::new(8, 4), Edge::East, &c), 1);
        assert_eq!(shortest_path_len(Cell::new(8, 4), Edge::West, &c), 9);
        let c = ScenarioConfig::square(Scenario::Perpendicular, 9).unwrap();
        assert_eq!(shortest_path_len(Cell::new(4, 0), Edge::South, &c), 9);
        assert_eq!(shortest_path_len(Cell::new(4, 3), Edge::North, &c), 4);
    }
}
