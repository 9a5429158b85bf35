//! Value learners and action-selection policies.
//!
//! A [`ValueLearner`] owns an action-value estimate and learns from observed
//! transitions; an [`policy::ActionSelector`] turns its Q-values into actions,
//! optionally consulting a [`shield::SafetyCheck`].

pub mod dqn;
pub mod features;
pub mod mlp;
pub mod policy;
pub mod replay;
pub mod shield;
pub mod tabular;

use std::io::{self, Write};

use rand::RngCore;

use crate::envs::Observation;

pub use dqn::{Dqn, DqnAgent, DqnConfig};
pub use policy::{selector, ActionSelector, Decision, EpsilonSchedule, PolicyInput, SELECTORS};
pub use replay::ReplayBuffer;
pub use shield::{random_safe_action, RuleShield, SafetyCheck};
pub use tabular::{LearningRate, QTable, StateKey, TabularAgent};

/// One transition `(s, a, r, s', terminal)` over some state representation.
#[derive(Clone, Debug, PartialEq)]
pub struct Experience<S> {
    pub state: S,
    pub action: usize,
    pub reward: f64,
    pub next_state: S,
    pub terminal: bool,
}

/// A transition as seen by the training loop, before featurisation.
#[derive(Clone, Copy, Debug)]
pub struct Transition<'a> {
    pub obs: &'a Observation,
    pub action: usize,
    pub reward: f64,
    pub next_obs: &'a Observation,
    pub terminal: bool,
}

pub trait ValueLearner: Send {
    fn kind(&self) -> &'static str;
    fn q_values(&mut self, obs: &Observation) -> Vec<f64>;
    /// Learns from one transition; returns a learner-specific progress value
    /// (loss or update size) when a learning step happened.
    fn observe(&mut self, t: &Transition<'_>, rng: &mut dyn RngCore) -> Option<f64>;
    fn save(&self, w: &mut dyn Write) -> io::Result<()>;
}

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("unsupported checkpoint version `{0}`")]
    Version(String),
    #[error("malformed checkpoint: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AgentError {
    #[error("replay buffer holds {have} transitions, minibatch needs {need}")]
    BufferTooSmall { have: usize, need: usize },
}
