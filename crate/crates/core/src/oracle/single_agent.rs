//! Tabular Q-learning on the crossing grid with the opponent removed.

use rand::Rng;

use crate::agents::{StateKey, TabularAgent, TabularParams, TabularTransition};
use crate::gridworld::{step, Action, AgentStatus, Cell, JointState, Scenario, ScenarioConfig};
use crate::rng::{stream, Stream};

use super::SingleAgentQ;

/// State with agent 0 at `cell` and agent 1 already gone.
pub fn alone_at(cell: Cell) -> JointState {
    JointState {
        pos: [Some(cell), None],
        t: 0,
        status: [AgentStatus::Active, AgentStatus::ReachedGoal],
    }
}

/// Agent 0 of the parallel scenario on a `size`×`size` grid, trained with
/// `updates` backups on uniformly drawn (cell, action) pairs.
pub fn train_alone(size: u32, updates: usize, params: TabularParams, seed: u64) -> (ScenarioConfig, TabularAgent) {
    let config = ScenarioConfig::square(Scenario::Parallel, size).expect("valid size");
    let mut agent = TabularAgent::new(0, &config, params).expect("valid params");
    let mut rng = stream(seed, Stream::AgentA);
    for _ in 0..updates {
        let cell = Cell::new(rng.random_range(0..size as i32), rng.random_range(0..size as i32));
        let action = Action::ALL[rng.random_range(0..Action::COUNT)];
        let state = alone_at(cell);
        let out = step(&state, [action, Action::Stay], &config).expect("active agent");
        agent.update(&TabularTransition {
            state: StateKey::of(&state, 0),
            action,
            reward: out.reward[0],
            next: StateKey::of(&out.next, 0),
            terminal: out.terminal,
        });
    }
    (config, agent)
}

/// Largest `|Q − Q*|` over every in-grid state and action.
pub fn max_error(agent: &TabularAgent, oracle: &SingleAgentQ) -> f64 {
    let mut worst = 0.0f64;
    for y in 0..oracle.height as i32 {
        for x in 0..oracle.width as i32 {
            let c = Cell::new(x, y);
            let key = StateKey::of(&alone_at(c), 0);
            for a in Action::ALL {
                worst = worst.max((agent.table.get(key, a) - oracle.at(c)[a.index()]).abs());
            }
        }
    }
    worst
}

/// Moves agent 0 takes greedily from its spawn, with the opponent absent,
/// and whether it reached the goal.
pub fn greedy_path(agent: &TabularAgent, config: &ScenarioConfig) -> (usize, bool) {
    let mut state = alone_at(config.spawn[0]);
    let mut len = 0;
    while state.is_active(0) {
        let a = agent.table.greedy(StateKey::of(&state, 0));
        state = step(&state, [a, Action::Stay], config).expect("active agent").next;
        len += 1;
    }
    (len, state.status[0] == AgentStatus::ReachedGoal)
}
