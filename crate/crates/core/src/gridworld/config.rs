use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::symmetry::Isometry;
use super::Cell;

/// Grid side. `North` is the `y = 0` row, `West` the `x = 0` column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Edge {
    North,
    South,
    East,
    West,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::North, Edge::South, Edge::East, Edge::West];

    pub fn opposite(self) -> Edge {
        match self {
            Edge::North => Edge::South,
            Edge::South => Edge::North,
            Edge::East => Edge::West,
            Edge::West => Edge::East,
        }
    }

    /// Unit step that leaves the grid through this edge.
    pub fn outward(self) -> (i32, i32) {
        match self {
            Edge::North => (0, -1),
            Edge::South => (0, 1),
            Edge::East => (1, 0),
            Edge::West => (-1, 0),
        }
    }

    /// Whether `cell` lies on this edge of a `width`×`height` grid.
    pub fn contains(self, cell: Cell, width: u32, height: u32) -> bool {
        match self {
            Edge::North => cell.y == 0,
            Edge::South => cell.y == height as i32 - 1,
            Edge::West => cell.x == 0,
            Edge::East => cell.x == width as i32 - 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Edge::North => "north",
            Edge::South => "south",
            Edge::East => "east",
            Edge::West => "west",
        }
    }

    pub fn parse(s: &str) -> Option<Edge> {
        Edge::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    /// Agents face each other across the grid and travel along the same line.
    Parallel,
    /// Agents enter from adjacent edges; their straight paths cross at the centre.
    Perpendicular,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Parallel => "parallel",
            Scenario::Perpendicular => "perpendicular",
        }
    }

    pub fn parse(s: &str) -> Option<Scenario> {
        match s.trim().to_ascii_lowercase().as_str() {
            "parallel" => Some(Scenario::Parallel),
            "perpendicular" => Some(Scenario::Perpendicular),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec {
    pub r_goal: f64,
    pub r_collide: f64,
    pub r_wrong: f64,
    pub r_step: f64,
    pub gamma: f64,
}

impl Default for RewardSpec {
    fn default() -> Self {
        RewardSpec {
            r_goal: 1.0,
            r_collide: -1.0,
            r_wrong: -1.0,
            r_step: -0.01,
            gamma: 0.99,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("grid {width}x{height} is too small: width and height must be at least 5")]
    GridTooSmall { width: u32, height: u32 },
    #[error("grid {width}x{height} is too large: sides are limited to 4096 cells")]
    GridTooLarge { width: u32, height: u32 },
    #[error("perpendicular scenario requires a square grid, got {width}x{height}")]
    NotSquare { width: u32, height: u32 },
    #[error("spawn of agent {agent} at ({x},{y}) is outside the grid")]
    SpawnOutsideGrid { agent: usize, x: i32, y: i32 },
    #[error("spawn of agent {agent} is not on the edge opposite its target edge {target:?}")]
    SpawnNotOpposite { agent: usize, target: Edge },
    #[error("spawns coincide")]
    SpawnsCoincide,
    #[error("target edges {0:?} and {1:?} do not match the {2:?} scenario")]
    ScenarioEdges(Edge, Edge, Scenario),
    #[error("parallel spawns must share a row or column")]
    ParallelLanes,
    #[error("no grid isometry exchanges the two agents' spawn and target")]
    Asymmetric,
    #[error("max_steps {max_steps} is below 2*(width+height) = {min}")]
    MaxStepsTooSmall { max_steps: u32, min: u32 },
    #[error("reward constant {name} = {value} has the wrong sign or is not finite")]
    RewardSign { name: &'static str, value: f64 },
    #[error("gamma {0} must lie in (0, 1)")]
    Gamma(f64),
    #[error("step penalties dominate the goal: |r_step|*max_steps = {total} >= r_goal = {goal}")]
    StepPenaltyDominates { total: f64, goal: f64 },
    #[error("frame_stack must be at least 1")]
    FrameStack,
}

/// Static description of one crossing game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub width: u32,
    pub height: u32,
    pub scenario: Scenario,
    pub spawn: [Cell; 2],
    pub target_edge: [Edge; 2],
    pub reward: RewardSpec,
    pub max_steps: u32,
    pub frame_stack: u32,
    pub seed: u64,
}

impl ScenarioConfig {
    /// Default configuration for `scenario` on a `width`×`height` grid, with
    /// midpoint spawns.
    pub fn new(scenario: Scenario, width: u32, height: u32) -> Result<Self, ConfigError> {
        let (spawn, target_edge) = match scenario {
            Scenario::Parallel => (
                [
                    Cell::new(0, height as i32 / 2),
                    Cell::new(width as i32 - 1, height as i32 / 2),
                ],
                [Edge::East, Edge::West],
            ),
            Scenario::Perpendicular => (
                [Cell::new(0, height as i32 / 2), Cell::new(width as i32 / 2, 0)],
                [Edge::East, Edge::South],
            ),
        };
        let max_steps = Self::default_max_steps(width, height);
        let mut reward = RewardSpec::default();
        if -reward.r_step * max_steps as f64 >= reward.r_goal {
            reward.r_step = -0.001;
        }
        let config = ScenarioConfig {
            width,
            height,
            scenario,
            spawn,
            target_edge,
            reward,
            max_steps,
            frame_stack: 4,
            seed: 0,
        };
        config.validate()?;
        Ok(config)
    }

    /// Square grid shorthand.
    pub fn square(scenario: Scenario, size: u32) -> Result<Self, ConfigError> {
        Self::new(scenario, size, size)
    }

    pub fn default_max_steps(width: u32, height: u32) -> u32 {
        2 * (width + height) + 16
    }

    pub fn cells(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn in_grid(&self, cell: Cell) -> bool {
        cell.x >= 0 && cell.y >= 0 && cell.x < self.width as i32 && cell.y < self.height as i32
    }

    /// Row-major index of an in-grid cell.
    pub fn cell_index(&self, cell: Cell) -> usize {
        cell.y as usize * self.width as usize + cell.x as usize
    }

    /// The grid isometry that exchanges the agents' roles.
    pub fn isometry(&self) -> Option<Isometry> {
        Isometry::ALL.into_iter().find(|iso| {
            iso.is_valid(self.width, self.height)
                && (0..2).all(|i| {
                    iso.cell(self.spawn[i], self.width, self.height) == self.spawn[1 - i]
                        && iso.edge(self.target_edge[i]) == self.target_edge[1 - i]
                })
        })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let (w, h) = (self.width, self.height);
        if w < 5 || h < 5 {
            return Err(ConfigError::GridTooSmall {
                width: w,
                height: h,
            });
        }
        if w > 4096 || h > 4096 {
            return Err(ConfigError::GridTooLarge {
                width: w,
                height: h,
            });
        }
        if self.scenario == Scenario::Perpendicular && w != h {
            return Err(ConfigError::NotSquare {
                width: w,
                height: h,
            });
        }
        for (agent, (&cell, &target)) in self.spawn.iter().zip(&self.target_edge).enumerate() {
            if !self.in_grid(cell) {
                return Err(ConfigError::SpawnOutsideGrid {
                    agent,
                    x: cell.x,
                    y: cell.y,
                });
            }
            if !target.opposite().contains(cell, w, h) {
                return Err(ConfigError::SpawnNotOpposite { agent, target });
            }
        }
        if self.spawn[0] == self.spawn[1] {
            return Err(ConfigError::SpawnsCoincide);
        }
        let [t0, t1] = self.target_edge;
        let perpendicular = |a: Edge, b: Edge| a != b && a != b.opposite();
        match self.scenario {
            Scenario::Parallel => {
                if t0 != t1.opposite() {
                    return Err(ConfigError::ScenarioEdges(t0, t1, self.scenario));
                }
                let horizontal = matches!(t0, Edge::East | Edge::West);
                let same_lane = if horizontal {
                    self.spawn[0].y == self.spawn[1].y
                } else {
                    self.spawn[0].x == self.spawn[1].x
                };
                if !same_lane {
                    return Err(ConfigError::ParallelLanes);
                }
            }
            Scenario::Perpendicular => {
                if !perpendicular(t0, t1) {
                    return Err(ConfigError::ScenarioEdges(t0, t1, self.scenario));
                }
            }
        }
        if self.isometry().is_none() {
            return Err(ConfigError::Asymmetric);
        }
        let min = 2 * (w + h);
        if self.max_steps < min {
            return Err(ConfigError::MaxStepsTooSmall {
                max_steps: self.max_steps,
                min,
            });
        }
        let r = &self.reward;
        for (name, value, positive) in [
            ("r_goal", r.r_goal, true),
            ("r_collide", r.r_collide, false),
            ("r_wrong", r.r_wrong, false),
            ("r_step", r.r_step, false),
        ] {
            let ok = value.is_finite() && if positive { value > 0.0 } else { value < 0.0 };
            if !ok {
                return Err(ConfigError::RewardSign { name, value });
            }
        }
        if !(r.gamma > 0.0 && r.gamma < 1.0) {
            return Err(ConfigError::Gamma(r.gamma));
        }
        let total = -r.r_step * self.max_steps as f64;
        if total >= r.r_goal {
            return Err(ConfigError::StepPenaltyDominates {
                total,
                goal: r.r_goal,
            });
        }
        if self.frame_stack == 0 {
            return Err(ConfigError::FrameStack);
        }
        Ok(())
    }
}
