//! Grid isometries and the role-exchanging mirror of the game.

use super::{Action, Cell, Edge, JointState, StepOutcome};
use super::ScenarioConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Isometry {
    /// `x ↦ W-1-x`
    ReflectX,
    /// `y ↦ H-1-y`
    ReflectY,
    /// `(x, y) ↦ (y, x)`; square grids only.
    Transpose,
    /// `(x, y) ↦ (W-1-y, H-1-x)`; square grids only.
    AntiTranspose,
    Rotate180,
}

impl Isometry {
    pub const ALL: [Isometry; 5] = [
        Isometry::ReflectX,
        Isometry::ReflectY,
        Isometry::Transpose,
        Isometry::AntiTranspose,
        Isometry::Rotate180,
    ];

    pub fn is_valid(self, width: u32, height: u32) -> bool {
        match self {
            Isometry::Transpose | Isometry::AntiTranspose => width == height,
            _ => true,
        }
    }

    pub fn cell(self, c: Cell, width: u32, height: u32) -> Cell {
        let (w, h) = (width as i32, height as i32);
        match self {
            Isometry::ReflectX => Cell::new(w - 1 - c.x, c.y),
            Isometry::ReflectY => Cell::new(c.x, h - 1 - c.y),
            Isometry::Transpose => Cell::new(c.y, c.x),
            Isometry::AntiTranspose => Cell::new(w - 1 - c.y, h - 1 - c.x),
            Isometry::Rotate180 => Cell::new(w - 1 - c.x, h - 1 - c.y),
        }
    }

    /// Linear part applied to a displacement.
    pub fn delta(self, (dx, dy): (i32, i32)) -> (i32, i32) {
        match self {
            Isometry::ReflectX => (-dx, dy),
            Isometry::ReflectY => (dx, -dy),
            Isometry::Transpose => (dy, dx),
            Isometry::AntiTranspose => (-dy, -dx),
            Isometry::Rotate180 => (-dx, -dy),
        }
    }

    pub fn edge(self, e: Edge) -> Edge {
        let d = self.delta(e.outward());
        Edge::ALL
            .into_iter()
            .find(|x| x.outward() == d)
            .expect("isometries permute edges")
    }

    pub fn action(self, a: Action) -> Action {
        Action::from_delta(self.delta(a.delta())).expect("isometries permute moves")
    }
}

fn iso(config: &ScenarioConfig) -> Isometry {
    config
        .isometry()
        .expect("validated configurations always have a role-exchanging isometry")
}

/// Applies the role-exchanging isometry and swaps agent indices.
pub fn mirror_state(state: &JointState, config: &ScenarioConfig) -> JointState {
    let g = iso(config);
    let map = |p: Option<Cell>| p.map(|c| g.cell(c, config.width, config.height));
    JointState {
        pos: [map(state.pos[1]), map(state.pos[0])],
        t: state.t,
        status: [state.status[1], state.status[0]],
    }
}

pub fn mirror_actions(actions: [Action; 2], config: &ScenarioConfig) -> [Action; 2] {
    let g = iso(config);
    [g.action(actions[1]), g.action(actions[0])]
}

pub fn mirror_outcome(outcome: &StepOutcome, config: &ScenarioConfig) -> StepOutcome {
    StepOutcome {
        next: mirror_state(&outcome.next, config),
        reward: [outcome.reward[1], outcome.reward[0]],
        terminal: outcome.terminal,
        events: [outcome.events[1], outcome.events[0]],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::{reset, step, AgentStatus, Scenario};

    #[test]
    fn default_scenarios_pick_the_expected_isometry() {
        let p = ScenarioConfig::square(Scenario::Parallel, 9).unwrap();
        assert_eq!(p.isometry(), Some(Isometry::ReflectX));
        let q = ScenarioConfig::square(Scenario::Perpendicular, 9).unwrap();
        assert_eq!(q.isometry(), Some(Isometry::Transpose));
    }

    #[test]
    fn parallel_mirror_of_positions() {
        let c = ScenarioConfig::square(Scenario::Parallel, 9).unwrap();
        let s = JointState {
            pos: [Some(Cell::new(1, 4)), Some(Cell::new(7, 4))],
            t: 2,
            status: [AgentStatus::Active; 2],
        };
        assert_eq!(mirror_state(&s, &c), s);
        let s = JointState {
            pos: [Some(Cell::new(1, 2)), None],
            t: 2,
            status: [AgentStatus::Active, AgentStatus::ReachedGoal],
        };
        let m = mirror_state(&s, &c);
        assert_eq!(m.pos, [None, Some(Cell::new(7, 2))]);
        assert_eq!(m.status, [AgentStatus::ReachedGoal, AgentStatus::Active]);
        assert_eq!(mirror_state(&m, &c), s);
    }

    #[test]
    fn parallel_action_conjugation_table() {
        let c = ScenarioConfig::square(Scenario::Parallel, 9).unwrap();
        // swap indices, then reflect x: Left <-> Right, Up/Down/Stay fixed
        assert_eq!(
            mirror_actions([Action::Right, Action::Stay], &c),
            [Action::Stay, Action::Left]
        );
        assert_eq!(
            mirror_actions([Action::Up, Action::Left], &c),
            [Action::Right, Action::Up]
        );
    }

    #[test]
    fn action_conjugation_brute_force_over_joint_actions() {
        // For each scenario, the conjugated action must move the mirrored agent
        // to the image of the original agent's destination, for all 25 pairs.
        for scenario in [Scenario::Parallel, Scenario::Perpendicular] {
            let c = ScenarioConfig::square(scenario, 9).unwrap();
            let g = c.isometry().unwrap();
            let s = reset(&c).unwrap();
            let start = [Cell::new(3, 3), Cell::new(5, 2)];
            for a0 in Action::ALL {
                for a1 in Action::ALL {
                    let m = mirror_actions([a0, a1], &c);
                    for (i, a) in [a0, a1].into_iter().enumerate() {
                        let dest = g.cell(start[i].shifted(a.delta()), 9, 9);
                        let img = g.cell(start[i], 9, 9).shifted(m[1 - i].delta());
                        assert_eq!(dest, img);
                    }
                    assert_eq!(mirror_actions(m, &c), [a0, a1]);
                }
            }
            assert_eq!(mirror_state(&mirror_state(&s, &c), &c), s);
        }
    }

    #[test]
    fn equivariance_on_opening_moves() {
        let c = ScenarioConfig::square(Scenario::Perpendicular, 9).unwrap();
        let s = reset(&c).unwrap();
        for a0 in Action::ALL {
            for a1 in Action::ALL {
                let a = [a0, a1];
                let lhs = step(&mirror_state(&s, &c), mirror_actions(a, &c), &c).unwrap();
                let rhs = mirror_outcome(&step(&s, a, &c).unwrap(), &c);
                assert_eq!(lhs, rhs);
            }
        }
    }
}
