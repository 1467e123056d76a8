//! Two-agent crossing grid world with independent Q-learners.
//!
//! The crate is `no_std` (with `alloc`) and holds everything that is pure
//! computation: the Markov game itself, a small convolutional Q-network
//! kernel with analytic gradients, tabular and deep Q-learning agents, the
//! episode loop, and the payoff / equilibrium analysis. File formats, the
//! experiment harness and the command line live in the `hawkdove` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod agents;
pub mod analysis;
pub mod gridworld;
pub mod numerics;
pub mod rng;
pub mod rollout;

#[cfg(any(test, feature = "oracles"))]
pub mod oracle;

pub use gridworld::{
    reset, shortest_path_len, step, Action, AgentStatus, Cell, ConfigError, Edge, Event,
    JointState, RewardSpec, Scenario, ScenarioConfig, StepError, StepOutcome,
};

/// Number of agents in the game.
pub const AGENTS: usize = 2;
