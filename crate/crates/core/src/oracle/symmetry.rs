//! Exhaustive equivariance check over the reachable state space.

use alloc::collections::{BTreeSet, VecDeque};

use crate::gridworld::{mirror_actions, mirror_outcome, mirror_state, reset, step, Action, JointState, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetrySweep {
    pub states: usize,
    pub pairs: usize,
    pub violations: usize,
}

fn key(s: &JointState) -> (u32, [Option<(i32, i32)>; 2], [u8; 2]) {
    (s.t, s.pos.map(|p| p.map(|c| (c.x, c.y))), s.status.map(|st| st as u8))
}

/// Breadth-first search from the initial state over all 25 joint actions,
/// checking `step(mirror(s), mirror(a)) == mirror(step(s, a))` at every
/// reachable non-terminal state.
pub fn symmetry_sweep(config: &ScenarioConfig) -> SymmetrySweep {
    let start = reset(config).expect("valid config");
    let mut seen = BTreeSet::new();
    let mut queue = VecDeque::new();
    seen.insert(key(&start));
    queue.push_back(start);
    let mut sweep = SymmetrySweep {
        states: 0,
        pairs: 0,
        violations: 0,
    };
    while let Some(s) = queue.pop_front() {
        if s.is_terminal() {
            continue;
        }
        sweep.states += 1;
        let ms = mirror_state(&s, config);
        for a0 in Action::ALL {
            for a1 in Action::ALL {
                let a = [a0, a1];
                let out = step(&s, a, config).expect("non-terminal");
                let lhs = step(&ms, mirror_actions(a, config), config).expect("mirror of non-terminal");
                sweep.pairs += 1;
                if lhs != mirror_outcome(&out, config) {
                    sweep.violations += 1;
                }
                if seen.insert(key(&out.next)) {
                    queue.push_back(out.next);
                }
            }
        }
    }
    sweep
}
