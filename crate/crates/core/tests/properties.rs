use hawkdove_core::agents::{td_update, QTable, ReplayBuffer, StateKey, TabularTransition};
use hawkdove_core::gridworld::{mirror_actions, mirror_outcome, mirror_state, observe, FrameHistory};
use hawkdove_core::rng::{stream, Stream};
use hawkdove_core::rollout::{rollout, Policy, Trajectory};
use hawkdove_core::{step, Action, AgentStatus, Cell, Event, JointState, Scenario, ScenarioConfig};
use proptest::prelude::*;

struct Script {
    moves: Vec<Action>,
    next: usize,
}

impl Policy for Script {
    fn act(&mut self, _: &JointState, _: &ScenarioConfig) -> Action {
        let a = self.moves.get(self.next).copied().unwrap_or(Action::Stay);
        self.next += 1;
        a
    }
}

fn config() -> impl Strategy<Value = ScenarioConfig> {
    (prop_oneof![Just(Scenario::Parallel), Just(Scenario::Perpendicular)], 5u32..=11)
        .prop_map(|(s, n)| ScenarioConfig::square(s, n).unwrap())
}

fn moves() -> impl Strategy<Value = Vec<Action>> {
    prop::collection::vec((0usize..5).prop_map(|i| Action::ALL[i]), 0..80)
}

fn play(c: &ScenarioConfig, a: Vec<Action>, b: Vec<Action>) -> Trajectory {
    let mut p = Script { moves: a, next: 0 };
    let mut q = Script { moves: b, next: 0 };
    rollout(c, [&mut p, &mut q]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn step_commutes_with_mirror(c in config(), a in moves(), b in moves()) {
        let t = play(&c, a, b);
        for r in &t.steps {
            let lhs = step(&mirror_state(&r.state, &c), mirror_actions(r.actions, &c), &c).unwrap();
            let rhs = mirror_outcome(&step(&r.state, r.actions, &c).unwrap(), &c);
            prop_assert_eq!(lhs, rhs);
            prop_assert_eq!(mirror_state(&mirror_state(&r.state, &c), &c), r.state.clone());
        }
    }

    #[test]
    fn returns_are_step_penalties_plus_one_terminal_reward(c in config(), a in moves(), b in moves()) {
        let t = play(&c, a, b);
        prop_assert!(t.final_state.is_terminal());
        let r = &c.reward;
        for i in 0..2 {
            let active: Vec<_> = t.steps.iter().filter(|s| s.state.is_active(i)).collect();
            let last = active.last().expect("both agents start active");
            let terminal = match last.events[i] {
                Event::Goal => r.r_goal,
                Event::WrongExit => r.r_wrong,
                Event::Collision => r.r_collide,
                Event::Timeout => r.r_step,
                Event::None => unreachable!("episode ended with agent {i} active"),
            };
            let expect = (active.len() - 1) as f64 * r.r_step + terminal;
            prop_assert!((t.returns[i] - expect).abs() < 1e-9, "agent {}: {} vs {}", i, t.returns[i], expect);
            // Exited agents earn nothing.
            prop_assert!(t.steps.iter().filter(|s| !s.state.is_active(i)).all(|s| s.rewards[i] == 0.0));
        }
        prop_assert_eq!(t.recompute_returns(), t.returns);
    }

    #[test]
    fn discounted_return_matches_the_records(c in config(), a in moves(), b in moves(), gamma in 0.5f64..0.999) {
        let t = play(&c, a, b);
        for i in 0..2 {
            let mut expect = 0.0;
            let mut g = 1.0;
            for s in &t.steps {
                expect += g * s.rewards[i];
                g *= gamma;
            }
            prop_assert_eq!(t.discounted_return(i, gamma), expect);
        }
    }

    #[test]
    fn active_agents_never_share_a_cell(c in config(), a in moves(), b in moves()) {
        let t = play(&c, a, b);
        let states = t.steps.iter().map(|s| &s.state).chain(Some(&t.final_state));
        for s in states {
            if s.is_active(0) && s.is_active(1) {
                prop_assert_ne!(s.pos[0], s.pos[1]);
            }
            prop_assert!(s.t <= c.max_steps);
        }
        if t.collided() {
            prop_assert_eq!(t.final_status(), [AgentStatus::Collided; 2]);
        }
    }

    #[test]
    fn newest_planes_decode_to_active_positions(c in config(), a in moves(), b in moves()) {
        let t = play(&c, a, b);
        let (w, h) = (c.width as usize, c.height as usize);
        let decode = |planes: &[u8], channel: usize| -> Option<Cell> {
            let plane = &planes[channel * w * h..(channel + 1) * w * h];
            let hits: Vec<usize> = (0..w * h).filter(|&k| plane[k] == 1).collect();
            assert!(hits.len() <= 1);
            hits.first().map(|&k| Cell::new((k % w) as i32, (k / w) as i32))
        };
        for agent in 0..2 {
            let mut history = FrameHistory::start(&t.steps[0].state, agent, &c);
            for s in t.steps.iter().map(|s| &s.state).chain(Some(&t.final_state)) {
                let planes = observe(s, &history, agent, &c).planes();
                let visible = |i: usize| if s.is_active(i) { s.pos[i] } else { None };
                prop_assert_eq!(decode(&planes, 0), visible(agent));
                prop_assert_eq!(decode(&planes, 1), visible(1 - agent));
                history.push(hawkdove_core::gridworld::encode_frame(s, agent));
            }
        }
    }

    #[test]
    fn replay_buffer_keeps_the_newest_items(capacity in 1usize..40, pushes in 0usize..120, batch in 1usize..40, seed in any::<u64>()) {
        let mut buf = ReplayBuffer::new(capacity);
        for k in 0..pushes {
            buf.push(k);
            prop_assert!(buf.len() <= capacity);
        }
        let kept: Vec<usize> = buf.iter().copied().collect();
        let expect: Vec<usize> = (pushes.saturating_sub(capacity)..pushes).collect();
        prop_assert_eq!(kept, expect);
        let mut rng = stream(seed, Stream::AgentA);
        match buf.sample_indices(batch, &mut rng) {
            None => prop_assert!(buf.len() < batch),
            Some(mut idx) => {
                prop_assert_eq!(idx.len(), batch);
                prop_assert!(idx.iter().all(|&i| i < buf.len()));
                idx.sort_unstable();
                idx.dedup();
                prop_assert_eq!(idx.len(), batch);
            }
        }
    }

    #[test]
    fn td_update_touches_one_entry(
        init in -1.0f64..1.0,
        own in (0i32..5, 0i32..5),
        next in (0i32..5, 0i32..5),
        a in 0usize..5,
        reward in -1.0f64..1.0,
        eta in 0.01f64..1.0,
        terminal in any::<bool>(),
    ) {
        let mut t = QTable::filled(5, 5, init).unwrap();
        let s = StateKey { own: Some(Cell::new(own.0, own.1)), other: None };
        let n = StateKey { own: Some(Cell::new(next.0, next.1)), other: Some(Cell::new(0, 0)) };
        let before = t.clone();
        td_update(&mut t, &TabularTransition { state: s, action: Action::ALL[a], reward, next: n, terminal }, eta, 0.9);
        let changed = before.raw().iter().zip(t.raw()).filter(|(x, y)| x != y).count();
        prop_assert!(changed <= 1);
        let target = reward + if terminal { 0.0 } else { 0.9 * init };
        prop_assert!((t.get(s, Action::ALL[a]) - (init + eta * (target - init))).abs() < 1e-12);
    }
}
