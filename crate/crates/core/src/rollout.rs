//! Episode loop shared by training, evaluation and the analysis module.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentError;
use crate::gridworld::{
    reset, step, Action, AgentStatus, ConfigError, Event, JointState, ScenarioConfig, StepError,
};
use crate::rng::StreamRng;

/// A deterministic decision rule for one agent.
pub trait Policy {
    /// Called once with the initial state of every episode.
    fn begin(&mut self, _state: &JointState, _config: &ScenarioConfig) {}
    fn act(&mut self, state: &JointState, config: &ScenarioConfig) -> Action;
}

/// A Q-learner for one fixed agent index.
///
/// `View` is the learner's perception of the game (a state key for the
/// tabular learner, stacked image planes for the deep one).
pub trait Learner {
    type View: Clone;

    fn agent(&self) -> usize;
    fn view_start(&self, state: &JointState, config: &ScenarioConfig) -> Self::View;
    fn view_advance(&self, view: &Self::View, next: &JointState, config: &ScenarioConfig) -> Self::View;
    fn greedy(&self, view: &Self::View) -> Action;
    /// Exploratory action; advances the learner's exploration clock.
    fn explore(&mut self, view: &Self::View, rng: &mut StreamRng) -> Action;
    /// Consumes one transition of this agent.
    fn learn(
        &mut self,
        view: &Self::View,
        action: Action,
        reward: f64,
        next: &Self::View,
        terminal: bool,
        rng: &mut StreamRng,
    ) -> Result<(), AgentError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RolloutError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error(transparent)]
    Agent(#[from] AgentError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// State before the step.
    pub state: JointState,
    pub actions: [Action; 2],
    pub rewards: [f64; 2],
    pub events: [Event; 2],
}

/// A finished episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    pub final_state: JointState,
    /// Undiscounted per-agent returns.
    pub returns: [f64; 2],
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn recompute_returns(&self) -> [f64; 2] {
        let mut ret = [0.0; 2];
        for s in &self.steps {
            ret[0] += s.rewards[0];
            ret[1] += s.rewards[1];
        }
        ret
    }

    /// `Σ_t γ^t r_{t,agent}` over the recorded steps.
    pub fn discounted_return(&self, agent: usize, gamma: f64) -> f64 {
        let mut total = 0.0;
        let mut discount = 1.0;
        for s in &self.steps {
            total += discount * s.rewards[agent];
            discount *= gamma;
        }
        total
    }

    /// Number of steps during which `agent` was active.
    pub fn path_len(&self, agent: usize) -> usize {
        self.steps.iter().filter(|s| s.state.is_active(agent)).count()
    }

    /// The event that ended `agent`'s participation, if any.
    pub fn terminal_event(&self, agent: usize) -> Event {
        self.steps
            .iter()
            .map(|s| s.events[agent])
            .find(|e| *e != Event::None)
            .unwrap_or(Event::None)
    }

    pub fn final_status(&self) -> [AgentStatus; 2] {
        self.final_state.status
    }

    pub fn collided(&self) -> bool {
        self.final_state.status.contains(&AgentStatus::Collided)
    }

    pub fn both_reached_goal(&self) -> bool {
        self.final_state.status == [AgentStatus::ReachedGoal; 2]
    }

    /// Actions `agent` took while active.
    pub fn actions_of(&self, agent: usize) -> impl Iterator<Item = Action> + '_ {
        self.steps
            .iter()
            .filter(move |s| s.state.is_active(agent))
            .map(move |s| s.actions[agent])
    }
}

fn record(
    steps: &mut Vec<StepRecord>,
    returns: &mut [f64; 2],
    state: &JointState,
    actions: [Action; 2],
    rewards: [f64; 2],
    events: [Event; 2],
) {
    returns[0] += rewards[0];
    returns[1] += rewards[1];
    steps.push(StepRecord {
        state: state.clone(),
        actions,
        rewards,
        events,
    });
}

/// Plays one episode with two fixed policies.
pub fn rollout(
    config: &ScenarioConfig,
    policies: [&mut dyn Policy; 2],
) -> Result<Trajectory, RolloutError> {
    let [p0, p1] = policies;
    let mut state = reset(config)?;
    p0.begin(&state, config);
    p1.begin(&state, config);
    let mut steps = Vec::new();
    let mut returns = [0.0; 2];
    while !state.is_terminal() {
        let actions = [
            if state.is_active(0) { p0.act(&state, config) } else { Action::Stay },
            if state.is_active(1) { p1.act(&state, config) } else { Action::Stay },
        ];
        let out = step(&state, actions, config)?;
        record(&mut steps, &mut returns, &state, actions, out.reward, out.events);
        state = out.next;
    }
    Ok(Trajectory {
        steps,
        final_state: state,
        returns,
    })
}

/// Greedy (ε = 0) policy of a learner. Borrows the learner immutably.
pub struct GreedyPolicy<'a, L: Learner> {
    learner: &'a L,
    view: Option<L::View>,
}

impl<'a, L: Learner> GreedyPolicy<'a, L> {
    pub fn new(learner: &'a L) -> Self {
        GreedyPolicy {
            learner,
            view: None,
        }
    }
}

impl<L: Learner> Policy for GreedyPolicy<'_, L> {
    fn begin(&mut self, _state: &JointState, _config: &ScenarioConfig) {
        self.view = None;
    }

    fn act(&mut self, state: &JointState, config: &ScenarioConfig) -> Action {
        let view = match self.view.take() {
            None => self.learner.view_start(state, config),
            Some(v) => self.learner.view_advance(&v, state, config),
        };
        let a = self.learner.greedy(&view);
        self.view = Some(view);
        a
    }
}

/// The evaluation-mode policy of a learner.
pub fn greedy_policy<L: Learner>(learner: &L) -> GreedyPolicy<'_, L> {
    GreedyPolicy::new(learner)
}

/// Plays one episode with both learners. In [`Mode::Train`] both agents act
/// ε-greedily and learn from every transition they take part in; in
/// [`Mode::Eval`] both act greedily and nothing is mutated.
pub fn run_episode<L: Learner>(
    config: &ScenarioConfig,
    learners: &mut [L; 2],
    mode: Mode,
    rngs: &mut [StreamRng; 2],
) -> Result<Trajectory, RolloutError> {
    if mode == Mode::Eval {
        let [a, b] = learners;
        return rollout(config, [&mut greedy_policy(&*a), &mut greedy_policy(&*b)]);
    }
    let mut state = reset(config)?;
    let mut views = [
        learners[0].view_start(&state, config),
        learners[1].view_start(&state, config),
    ];
    let mut steps = Vec::new();
    let mut returns = [0.0; 2];
    while !state.is_terminal() {
        let mut actions = [Action::Stay; 2];
        for i in 0..2 {
            if state.is_active(i) {
                actions[i] = learners[i].explore(&views[i], &mut rngs[i]);
            }
        }
        let out = step(&state, actions, config)?;
        // A timeout is a truncation, not an outcome: learners keep
        // bootstrapping from where the clock stopped them.
        let mut seen = out.next.clone();
        for s in &mut seen.status {
            if *s == AgentStatus::TimedOut {
                *s = AgentStatus::Active;
            }
        }
        for i in 0..2 {
            if !state.is_active(i) {
                continue;
            }
            let next = learners[i].view_advance(&views[i], &seen, config);
            let done = !seen.is_active(i);
            learners[i].learn(&views[i], actions[i], out.reward[i], &next, done, &mut rngs[i])?;
            views[i] = next;
        }
        record(&mut steps, &mut returns, &state, actions, out.reward, out.events);
        state = out.next;
    }
    Ok(Trajectory {
        steps,
        final_state: state,
        returns,
    })
}
