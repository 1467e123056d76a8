use super::Strategy;
use crate::gridworld::{Action, Cell, JointState, Scenario, ScenarioConfig};
use crate::rollout::Policy;

type Vec2 = (i32, i32);

fn sub(a: Cell, b: Cell) -> Vec2 {
    (a.x - b.x, a.y - b.y)
}

fn dot(a: Vec2, b: Vec2) -> i32 {
    a.0 * b.0 + a.1 * b.1
}

/// Right-hand side of heading `h` with y pointing down.
fn right_of(h: Vec2) -> Vec2 {
    (-h.1, h.0)
}

fn neg(v: Vec2) -> Vec2 {
    (-v.0, -v.1)
}

fn act(v: Vec2) -> Action {
    Action::from_delta(v).expect("unit move")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    InLane,
    /// Stepped out of the lane towards `side`.
    Aside { side: Vec2 },
    Resumed,
}

/// Reference implementation of the two observed strategies.
///
/// Straight always moves towards the target edge. Avoid does the same but
/// yields: in the parallel scenario it sidesteps to its right while the
/// opponent is ahead in its lane and steps back once the opponent is behind;
/// in the perpendicular scenario it waits in front of the crossing cell
/// until the opponent has gone through. If both wait in front of the
/// crossing, the one without the opponent on its right goes first after
/// one wait.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptedPolicy {
    pub kind: Strategy,
    pub agent: usize,
    phase: Phase,
    waited: u32,
    crossing: Option<Cell>,
}

pub fn scripted_strategy(kind: Strategy, agent: usize, config: &ScenarioConfig) -> ScriptedPolicy {
    ScriptedPolicy {
        kind,
        agent,
        phase: Phase::InLane,
        waited: 0,
        crossing: crossing_cell(config),
    }
}

/// Where the two straight lanes meet, if they do.
fn crossing_cell(config: &ScenarioConfig) -> Option<Cell> {
    let [a, b] = config.spawn;
    let ha = config.target_edge[0].outward();
    let hb = config.target_edge[1].outward();
    if dot(ha, hb) != 0 {
        return None;
    }
    // Lane of a varies along ha; lane of b along hb.
    Some(if ha.0 != 0 { Cell::new(b.x, a.y) } else { Cell::new(a.x, b.y) })
}

impl ScriptedPolicy {
    pub fn waits(&self) -> u32 {
        self.waited
    }

    fn parallel_avoid(&mut self, me: Cell, opp: Option<Cell>, h: Vec2, config: &ScenarioConfig) -> Action {
        match self.phase {
            Phase::InLane => {
                if let Some(o) = opp {
                    let d = sub(o, me);
                    let lateral = dot(d, right_of(h));
                    if lateral == 0 && dot(d, h) > 0 {
                        let mut side = right_of(h);
                        if !config.in_grid(me.shifted(side)) {
                            side = neg(side);
                        }
                        self.phase = Phase::Aside { side };
                        return act(side);
                    }
                }
                act(h)
            }
            Phase::Aside { side } => {
                let behind = opp.is_none_or(|o| dot(sub(o, me), h) < 0);
                if behind {
                    self.phase = Phase::Resumed;
                    act(neg(side))
                } else {
                    act(h)
                }
            }
            Phase::Resumed => act(h),
        }
    }

    fn perpendicular_avoid(&mut self, me: Cell, opp: Option<Cell>, h: Vec2, config: &ScenarioConfig) -> Action {
        let (Some(cross), Some(o)) = (self.crossing, opp) else {
            return act(h);
        };
        let oh = config.target_edge[1 - self.agent].outward();
        let passed = dot(sub(o, cross), oh) > 0;
        if passed || me.shifted(h) != cross {
            return act(h);
        }
        let both_waiting = o.shifted(oh) == cross;
        let opponent_on_right = dot(sub(o, me), right_of(h)) > 0;
        if both_waiting && self.waited >= 1 && !opponent_on_right {
            return act(h);
        }
        self.waited += 1;
        Action::Stay
    }
}

impl Policy for ScriptedPolicy {
    fn begin(&mut self, _state: &JointState, config: &ScenarioConfig) {
        self.phase = Phase::InLane;
        self.waited = 0;
        self.crossing = crossing_cell(config);
    }

    fn act(&mut self, state: &JointState, config: &ScenarioConfig) -> Action {
        let h = config.target_edge[self.agent].outward();
        let Some(me) = state.pos[self.agent] else {
            return Action::Stay;
        };
        let other = 1 - self.agent;
        let opp = if state.is_active(other) { state.pos[other] } else { None };
        match (self.kind, config.scenario) {
            (Strategy::Straight, _) => act(h),
            (Strategy::Avoid, Scenario::Parallel) => self.parallel_avoid(me, opp, h, config),
            (Strategy::Avoid, Scenario::Perpendicular) => self.perpendicular_avoid(me, opp, h, config),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{classify, Label};
    use crate::rollout::rollout;

    fn play(scenario: Scenario, size: u32, kinds: [Strategy; 2]) -> (ScenarioConfig, crate::rollout::Trajectory) {
        let c = ScenarioConfig::square(scenario, size).unwrap();
        let mut a = scripted_strategy(kinds[0], 0, &c);
        let mut b = scripted_strategy(kinds[1], 1, &c);
        let t = rollout(&c, [&mut a, &mut b]).unwrap();
        (c, t)
    }

    #[test]
    fn straight_pair_collides_in_the_middle() {
        let (c, t) = play(Scenario::Parallel, 9, [Strategy::Straight; 2]);
        assert_eq!(t.len(), 4);
        assert!(t.collided());
        for i in 0..2 {
            assert_eq!(classify(&t, i, &c).unwrap().label, Label::Collide);
            assert!((t.returns[i] - (-1.03)).abs() < 1e-12);
        }
    }

    #[test]
    fn sidestep_costs_two_moves() {
        let (c, t) = play(Scenario::Parallel, 9, [Strategy::Straight, Strategy::Avoid]);
        assert!(t.both_reached_goal());
        let s = classify(&t, 0, &c).unwrap();
        let a = classify(&t, 1, &c).unwrap();
        assert_eq!((s.label, s.extra_steps), (Label::Straight, 0));
        assert_eq!((a.label, a.extra_steps, a.waited), (Label::Avoid, 2, false));
        assert!((t.returns[0] - 0.92).abs() < 1e-12);
        assert!((t.returns[1] - 0.90).abs() < 1e-12);
    }

    #[test]
    fn waiting_at_the_crossing() {
        let (c, t) = play(Scenario::Perpendicular, 9, [Strategy::Avoid, Strategy::Straight]);
        assert!(t.both_reached_goal());
        let a = classify(&t, 0, &c).unwrap();
        assert_eq!((a.label, a.extra_steps, a.waited), (Label::Avoid, 2, true));
        assert_eq!(classify(&t, 1, &c).unwrap().label, Label::Straight);
    }

    #[test]
    fn two_avoiders_resolve_the_crossing() {
        let (c, t) = play(Scenario::Perpendicular, 9, [Strategy::Avoid; 2]);
        assert!(t.both_reached_goal());
        assert_eq!(classify(&t, 0, &c).unwrap().extra_steps, 1);
        assert_eq!(classify(&t, 1, &c).unwrap().extra_steps, 3);
        let (c, t) = play(Scenario::Parallel, 9, [Strategy::Avoid; 2]);
        assert!(t.both_reached_goal());
        for i in 0..2 {
            assert_eq!(classify(&t, i, &c).unwrap().extra_steps, 2);
        }
    }
}
