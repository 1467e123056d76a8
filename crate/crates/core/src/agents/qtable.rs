use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{policy, AgentError, EpsilonSchedule, TieBreak};
use crate::gridworld::{shortest_path_len, Action, Cell, JointState, ScenarioConfig};
use crate::rng::StreamRng;
use crate::rollout::Learner;

/// Largest table we are willing to allocate.
const MAX_ENTRIES: usize = 1 << 24;

/// Tabular state: own cell and the other agent's cell (`None` once it has
/// left the grid).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateKey {
    pub own: Option<Cell>,
    pub other: Option<Cell>,
}

impl StateKey {
    pub fn of(state: &JointState, agent: usize) -> Self {
        let visible = |i: usize| if state.is_active(i) { state.pos[i] } else { None };
        StateKey {
            own: visible(agent),
            other: visible(1 - agent),
        }
    }
}

/// Dense Q-table over `(own cell, other cell or exited) × action`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(width: u32, height: u32) -> Result<Self, AgentError> {
        Self::filled(width, height, 0.0)
    }

    /// Table with every entry set to `init`.
    pub fn filled(width: u32, height: u32, init: f64) -> Result<Self, AgentError> {
        let slots = (width as usize * height as usize).saturating_add(1);
        let entries = slots.saturating_mul(slots).saturating_mul(Action::COUNT);
        if entries > MAX_ENTRIES {
            return Err(AgentError::TableTooLarge { entries });
        }
        Ok(QTable {
            width,
            height,
            values: vec![init; entries],
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn slot(&self, c: Option<Cell>) -> usize {
        let n = self.width as usize * self.height as usize;
        match c {
            Some(c) => {
                assert!(
                    c.x >= 0 && c.y >= 0 && (c.x as u32) < self.width && (c.y as u32) < self.height,
                    "cell {c:?} outside the table"
                );
                c.y as usize * self.width as usize + c.x as usize
            }
            None => n,
        }
    }

    fn base(&self, s: StateKey) -> usize {
        let slots = self.width as usize * self.height as usize + 1;
        (self.slot(s.own) * slots + self.slot(s.other)) * Action::COUNT
    }

    pub fn values(&self, s: StateKey) -> &[f64] {
        let b = self.base(s);
        &self.values[b..b + Action::COUNT]
    }

    pub fn get(&self, s: StateKey, a: Action) -> f64 {
        self.values[self.base(s) + a.index()]
    }

    pub fn set(&mut self, s: StateKey, a: Action, q: f64) {
        let b = self.base(s);
        self.values[b + a.index()] = q;
    }

    pub fn max(&self, s: StateKey) -> f64 {
        self.values(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn greedy(&self, s: StateKey) -> Action {
        Action::ALL[policy::argmax(self.values(s))]
    }

    fn key_of(&self, slot: usize) -> Option<Cell> {
        let n = self.width as usize * self.height as usize;
        (slot < n).then(|| Cell::new((slot % self.width as usize) as i32, (slot / self.width as usize) as i32))
    }

    /// Non-zero entries in [`QTable::entries`] order.
    pub fn nonzero(&self) -> impl Iterator<Item = (StateKey, Action, f64)> + '_ {
        self.entries().filter(|e| e.2 != 0.0)
    }

    /// Every entry, ordered by (own, other, action) with exited agents
    /// sorting last.
    pub fn entries(&self) -> impl Iterator<Item = (StateKey, Action, f64)> + '_ {
        let slots = self.width as usize * self.height as usize + 1;
        self.values.iter().enumerate().map(move |(i, q)| {
            let a = i % Action::COUNT;
            let pair = i / Action::COUNT;
            let key = StateKey {
                own: self.key_of(pair / slots),
                other: self.key_of(pair % slots),
            };
            (key, Action::ALL[a], *q)
        })
    }

    pub fn raw(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TabularTransition {
    pub state: StateKey,
    pub action: Action,
    pub reward: f64,
    pub next: StateKey,
    pub terminal: bool,
}

/// One Q-learning backup; touches only `(state, action)`.
pub fn td_update(table: &mut QTable, tr: &TabularTransition, eta: f64, gamma: f64) {
    let bootstrap = if tr.terminal { 0.0 } else { gamma * table.max(tr.next) };
    let q = table.get(tr.state, tr.action);
    table.set(tr.state, tr.action, q + eta * (tr.reward + bootstrap - q));
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TabularParams {
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    pub tie_break: TieBreak,
    /// Value every entry starts from. `None` picks the discounted return of
    /// an unobstructed straight run from the agent's spawn.
    pub initial_q: Option<f64>,
}

impl Default for TabularParams {
    fn default() -> Self {
        TabularParams {
            learning_rate: 0.1,
            gamma: 0.99,
            epsilon: EpsilonSchedule::default(),
            tie_break: TieBreak::Lowest,
            initial_q: None,
        }
    }
}

impl TabularParams {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.learning_rate >= 0.0 && self.learning_rate <= 1.0) {
            return Err(AgentError::Hyperparameter("tabular learning rate must lie in [0, 1]"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(AgentError::Hyperparameter("gamma must lie in (0, 1)"));
        }
        if !self.epsilon.is_valid() {
            return Err(AgentError::Hyperparameter("invalid epsilon schedule"));
        }
        if self.initial_q.is_some_and(|q| !q.is_finite()) {
            return Err(AgentError::Hyperparameter("initial Q-value must be finite"));
        }
        Ok(())
    }
}

/// Independent tabular Q-learner for one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularAgent {
    pub agent: usize,
    pub table: QTable,
    pub params: TabularParams,
    /// Environment steps taken in training mode (drives ε).
    pub env_steps: u64,
}

/// Discounted return of walking straight from `agent`'s spawn to its goal
/// with nobody in the way.
pub fn straight_line_value(agent: usize, config: &ScenarioConfig, gamma: f64) -> f64 {
    let moves = shortest_path_len(config.spawn[agent], config.target_edge[agent], config);
    let r = &config.reward;
    let mut v = 0.0;
    let mut discount = 1.0;
    for _ in 1..moves {
        v += discount * r.r_step;
        discount *= gamma;
    }
    v + discount * r.r_goal
}

impl TabularAgent {
    /// Unless overridden, the table starts at [`straight_line_value`]. With a
    /// zero start the greedy agents sit well below the value of the straight
    /// run, both learn to yield after early collisions and rarely unlearn it.
    pub fn new(agent: usize, config: &ScenarioConfig, params: TabularParams) -> Result<Self, AgentError> {
        params.validate()?;
        let init = params
            .initial_q
            .unwrap_or_else(|| straight_line_value(agent, config, params.gamma));
        Ok(TabularAgent {
            agent,
            table: QTable::filled(config.width, config.height, init)?,
            params,
            env_steps: 0,
        })
    }

    pub fn update(&mut self, tr: &TabularTransition) {
        td_update(&mut self.table, tr, self.params.learning_rate, self.params.gamma);
    }
}

impl Learner for TabularAgent {
    type View = StateKey;

    fn agent(&self) -> usize {
        self.agent
    }

    fn view_start(&self, state: &JointState, _config: &ScenarioConfig) -> StateKey {
        StateKey::of(state, self.agent)
    }

    fn view_advance(&self, _view: &StateKey, next: &JointState, _config: &ScenarioConfig) -> StateKey {
        StateKey::of(next, self.agent)
    }

    fn greedy(&self, view: &StateKey) -> Action {
        self.table.greedy(*view)
    }

    fn explore(&mut self, view: &StateKey, rng: &mut StreamRng) -> Action {
        let a = policy::select_action(
            self.table.values(*view),
            &self.params.epsilon,
            self.env_steps,
            self.params.tie_break,
            rng,
        );
        self.env_steps += 1;
        a
    }

    fn learn(
        &mut self,
        view: &StateKey,
        action: Action,
        reward: f64,
        next: &StateKey,
        terminal: bool,
        _rng: &mut StreamRng,
    ) -> Result<(), AgentError> {
        self.update(&TabularTransition {
            state: *view,
            action,
            reward,
            next: *next,
            terminal,
        });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridworld::Scenario;

    fn key(a: (i32, i32), b: Option<(i32, i32)>) -> StateKey {
        StateKey {
            own: Some(Cell::new(a.0, a.1)),
            other: b.map(|(x, y)| Cell::new(x, y)),
        }
    }

    #[test]
    fn terminal_update_is_plain_arithmetic() {
        let mut t = QTable::new(5, 5).unwrap();
        let s = key((1, 1), Some((2, 2)));
        let tr = TabularTransition {
            state: s,
            action: Action::Right,
            reward: 1.0,
            next: key((2, 1), None),
            terminal: true,
        };
        td_update(&mut t, &tr, 0.5, 0.99);
        assert_eq!(t.get(s, Action::Right), 0.5);
        let before = t.clone();
        td_update(&mut t, &tr, 0.0, 0.99);
        assert_eq!(t, before);
    }

    #[test]
    fn bootstraps_from_next_state_maximum() {
        let mut t = QTable::new(5, 5).unwrap();
        let s = key((0, 0), None);
        let n = key((1, 0), None);
        t.set(n, Action::Down, 2.0);
        let tr = TabularTransition {
            state: s,
            action: Action::Right,
            reward: -0.5,
            next: n,
            terminal: false,
        };
        td_update(&mut t, &tr, 1.0, 0.5);
        assert_eq!(t.get(s, Action::Right), 0.5);
        assert_eq!(t.nonzero().count(), 2);
    }

    #[test]
    fn nonzero_round_trips_keys() {
        let mut t = QTable::new(5, 6).unwrap();
        let s = StateKey {
            own: Some(Cell::new(4, 5)),
            other: None,
        };
        t.set(s, Action::Stay, -0.25);
        let got: Vec<_> = t.nonzero().collect();
        assert_eq!(got, vec![(s, Action::Stay, -0.25)]);
    }

    #[test]
    fn zero_table_prefers_first_action() {
        let c = ScenarioConfig::square(Scenario::Parallel, 9).unwrap();
        let params = TabularParams {
            initial_q: Some(0.0),
            ..TabularParams::default()
        };
        let a = TabularAgent::new(0, &c, params).unwrap();
        assert_eq!(a.greedy(&key((0, 4), Some((8, 4)))), Action::Up);
    }

    #[test]
    fn default_start_is_the_straight_run() {
        let c = ScenarioConfig::square(Scenario::Parallel, 9).unwrap();
        // Eight step penalties, then the goal.
        let expect: f64 = (0..8).map(|k| -0.01 * 0.99f64.powi(k)).sum::<f64>() + 0.99f64.powi(8);
        let v = straight_line_value(1, &c, 0.99);
        assert!((v - expect).abs() < 1e-12, "{v}");
        let a = TabularAgent::new(1, &c, TabularParams::default()).unwrap();
        assert_eq!(a.table.get(key((3, 3), None), Action::Left), v);
    }

    #[test]
    fn refuses_huge_tables() {
        assert!(matches!(QTable::new(64, 64), Err(AgentError::TableTooLarge { .. })));
    }
}
