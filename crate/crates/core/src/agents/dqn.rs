use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{policy, AgentError, EpsilonSchedule, ReplayBuffer, SumTree, TieBreak};
use crate::gridworld::observe::{encode_frame, FrameHistory};
use crate::gridworld::{observe, Action, JointState, Observation, ScenarioConfig};
use crate::numerics::{Optimizer, OptimizerKind, QNetwork, Tensor};
use crate::rng::StreamRng;
use crate::rollout::Learner;

/// How training batches are drawn from the replay buffer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum ReplayKind {
    #[default]
    Uniform,
    /// Proportional to `(|TD error| + 1e-6)^alpha`, new transitions at the
    /// running maximum. The loss is not reweighted.
    Prioritized { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DqnParams {
    pub capacity: usize,
    pub batch_size: usize,
    /// Train steps between hard target syncs.
    pub sync_period: u64,
    pub learning_rate: f64,
    /// Zero selects plain SGD.
    pub momentum: f64,
    pub gamma: f64,
    pub epsilon: EpsilonSchedule,
    /// Train steps per environment step.
    pub train_ratio: u32,
    /// Environment steps between training rounds.
    pub train_every: u32,
    /// Buffer size required before training starts (never below the batch size).
    pub learning_starts: usize,
    pub tie_break: TieBreak,
    pub replay: ReplayKind,
    /// Starting output bias, so every Q-value begins here. `None` leaves the
    /// zero bias of the initialiser.
    pub initial_q: Option<f64>,
}

impl Default for DqnParams {
    fn default() -> Self {
        DqnParams {
            capacity: 50_000,
            batch_size: 32,
            sync_period: 500,
            learning_rate: 1e-3,
            momentum: 0.0,
            gamma: 0.99,
            epsilon: EpsilonSchedule::default(),
            train_ratio: 1,
            train_every: 1,
            learning_starts: 32,
            tie_break: TieBreak::Lowest,
            replay: ReplayKind::Uniform,
            initial_q: None,
        }
    }
}

impl DqnParams {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.capacity == 0 || self.batch_size == 0 || self.batch_size > self.capacity {
            return Err(AgentError::Hyperparameter("need 0 < batch_size <= capacity"));
        }
        if self.sync_period == 0 {
            return Err(AgentError::Hyperparameter("sync_period must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(AgentError::Hyperparameter("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(AgentError::Hyperparameter("momentum must lie in [0, 1)"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(AgentError::Hyperparameter("gamma must lie in (0, 1)"));
        }
        if !self.epsilon.is_valid() {
            return Err(AgentError::Hyperparameter("invalid epsilon schedule"));
        }
        if self.train_every == 0 {
            return Err(AgentError::Hyperparameter("train_every must be at least 1"));
        }
        if self.initial_q.is_some_and(|q| !q.is_finite()) {
            return Err(AgentError::Hyperparameter("initial_q must be finite"));
        }
        if let ReplayKind::Prioritized { alpha } = self.replay {
            if !(0.0..=1.0).contains(&alpha) {
                return Err(AgentError::Hyperparameter("priority alpha must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    fn optimizer_kind(&self) -> OptimizerKind {
        if self.momentum == 0.0 {
            OptimizerKind::Sgd
        } else {
            OptimizerKind::Momentum(self.momentum)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DqnTransition {
    pub obs: Observation,
    pub action: Action,
    pub reward: f32,
    pub next_obs: Observation,
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrainOutcome {
    /// Not enough experience yet; nothing changed.
    Skipped,
    Trained { loss: f64 },
}

/// Deep Q-learner for one agent: online and target networks, replay and
/// optimizer state.
#[derive(Debug, Clone)]
pub struct DqnAgent {
    pub agent: usize,
    pub online: QNetwork<f32>,
    pub target: QNetwork<f32>,
    pub buffer: ReplayBuffer<DqnTransition>,
    /// Sampling weights per buffer slot under prioritized replay.
    pub priorities: Option<SumTree>,
    max_priority: f64,
    pub optimizer: Optimizer<f32>,
    pub params: DqnParams,
    pub env_steps: u64,
    pub train_steps: u64,
}

impl DqnAgent {
    /// Fresh agent; `init` seeds the weights.
    pub fn new(
        agent: usize,
        config: &ScenarioConfig,
        params: DqnParams,
        init: &mut StreamRng,
    ) -> Result<Self, AgentError> {
        params.validate()?;
        let shape = [
            crate::gridworld::observe::PLANES_PER_FRAME * config.frame_stack as usize,
            config.height as usize,
            config.width as usize,
        ];
        let mut online = QNetwork::q_network(shape, init)?;
        if let Some(q) = params.initial_q {
            let bias = online.params_mut().pop().expect("output layer has a bias");
            bias.data_mut().fill(q as f32);
        }
        let target = online.clone();
        Ok(DqnAgent {
            agent,
            online,
            target,
            buffer: ReplayBuffer::new(params.capacity),
            priorities: match params.replay {
                ReplayKind::Uniform => None,
                ReplayKind::Prioritized { .. } => Some(SumTree::new(params.capacity)),
            },
            max_priority: 1.0,
            optimizer: Optimizer::new(params.optimizer_kind(), params.learning_rate)?,
            params,
            env_steps: 0,
            train_steps: 0,
        })
    }

    pub fn q_values(&self, obs: &Observation) -> Result<Vec<f32>, AgentError> {
        let mut x = vec![0.0f32; obs.len()];
        obs.write_planes(&mut x, 0.0, 1.0);
        Ok(self.online.forward_one(&x)?)
    }

    fn batch_input(&self, obs: impl Iterator<Item = Observation>, batch: usize) -> Result<Tensor<f32>, AgentError> {
        let [c, h, w] = self.online.input_shape();
        let per = c * h * w;
        let mut data = vec![0.0f32; batch * per];
        for (chunk, o) in data.chunks_exact_mut(per).zip(obs) {
            o.write_planes(chunk, 0.0, 1.0);
        }
        Ok(Tensor::new(vec![batch, c, h, w], data)?)
    }

    /// One gradient step on a uniformly sampled batch.
    pub fn train_step(&mut self, rng: &mut StreamRng) -> Result<TrainOutcome, AgentError> {
        let need = self.params.batch_size.max(self.params.learning_starts);
        if self.buffer.len() < need {
            return Ok(TrainOutcome::Skipped);
        }
        let batch = self.params.batch_size;
        let idx = match &mut self.priorities {
            Some(tree) => tree.sample(batch, rng),
            None => self.buffer.sample_indices(batch, rng),
        }
        .expect("buffer holds at least one batch");
        let items: Vec<&DqnTransition> = idx.iter().map(|&i| self.buffer.get(i)).collect();

        let next = self.batch_input(items.iter().map(|t| t.next_obs.clone()), batch)?;
        let q_next = self.target.forward(&next)?;
        let width = Action::COUNT;
        let gamma = self.params.gamma as f32;
        let targets: Vec<f32> = items
            .iter()
            .enumerate()
            .map(|(b, t)| {
                if t.terminal {
                    t.reward
                } else {
                    let row = &q_next.data()[b * width..(b + 1) * width];
                    let best = row.iter().copied().fold(f32::NEG_INFINITY, f32::max);
                    t.reward + gamma * best
                }
            })
            .collect();
        let actions: Vec<usize> = items.iter().map(|t| t.action.index()).collect();
        let input = self.batch_input(items.iter().map(|t| t.obs.clone()), batch)?;

        let (loss, grads, residuals) = self.online.td_loss_grad_residuals(&input, &actions, &targets)?;
        if let (Some(tree), ReplayKind::Prioritized { alpha }) = (&mut self.priorities, self.params.replay) {
            for (&slot, r) in idx.iter().zip(residuals) {
                let p = num_traits::Float::powf(r.abs() + 1e-6, alpha);
                self.max_priority = self.max_priority.max(p);
                tree.set(slot, p);
            }
        }
        self.optimizer.step(&mut self.online, &grads)?;
        self.train_steps += 1;
        if self.train_steps % self.params.sync_period == 0 {
            self.target.copy_params_from(&self.online)?;
        }
        Ok(TrainOutcome::Trained { loss })
    }

    pub fn remember(&mut self, t: DqnTransition) {
        let slot = self.buffer.push(t);
        if let Some(tree) = &mut self.priorities {
            tree.set(slot, self.max_priority);
        }
    }
}

impl Learner for DqnAgent {
    type View = Observation;

    fn agent(&self) -> usize {
        self.agent
    }

    fn view_start(&self, state: &JointState, config: &ScenarioConfig) -> Observation {
        observe(state, &FrameHistory::start(state, self.agent, config), self.agent, config)
    }

    fn view_advance(&self, view: &Observation, next: &JointState, _config: &ScenarioConfig) -> Observation {
        let mut obs = view.clone();
        obs.frames.pop();
        obs.frames.insert(0, encode_frame(next, self.agent));
        obs
    }

    fn greedy(&self, view: &Observation) -> Action {
        let q = self.q_values(view).expect("observation matches the network input");
        Action::ALL[policy::argmax(&q)]
    }

    fn explore(&mut self, view: &Observation, rng: &mut StreamRng) -> Action {
        let q = self.q_values(view).expect("observation matches the network input");
        let a = policy::select_action(&q, &self.params.epsilon, self.env_steps, self.params.tie_break, rng);
        self.env_steps += 1;
        a
    }

    fn learn(
        &mut self,
        view: &Observation,
        action: Action,
        reward: f64,
        next: &Observation,
        terminal: bool,
        rng: &mut StreamRng,
    ) -> Result<(), AgentError> {
        self.remember(DqnTransition {
            obs: view.clone(),
            action,
            reward: reward as f32,
            next_obs: next.clone(),
            terminal,
        });
        if self.env_steps % u64::from(self.params.train_every) == 0 {
            for _ in 0..self.params.train_ratio {
                self.train_step(rng)?;
            }
        }
        Ok(())
    }
}
