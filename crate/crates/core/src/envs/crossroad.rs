use std::sync::Arc;

use super::{
    advance, initial_observation, EnvConfig, EnvError, Environment, ForwardModel, Observation,
    RewardMode, StepResult,
};
use crate::action::Action;

const ACTIONS: [Action; 5] = [
    Action::Up,
    Action::Down,
    Action::Left,
    Action::Right,
    Action::Stay,
];

/// Cross seven lanes of traffic from the bottom row to the top row.
///
/// Reaching row 0 wins (+1) and a collision loses (-1, or 0 in zero-one
/// mode); both end the episode.
#[derive(Clone, Debug)]
pub struct Crossroad {
    config: EnvConfig,
    state: Option<Observation>,
    done: bool,
}

struct CrossroadModel;

impl ForwardModel for CrossroadModel {
    fn predict(&self, obs: &Observation, action: Action) -> (Observation, bool) {
        advance(obs, action)
    }
}

impl Crossroad {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        if config.lanes.len() != 7 {
            return Err(EnvError::InvalidConfig(format!(
                "crossroad needs 7 lanes, got {}",
                config.lanes.len()
            )));
        }
        Ok(Self {
            config,
            state: None,
            done: false,
        })
    }

    /// Replaces the current episode state, e.g. to stage a specific situation.
    pub fn set_state(&mut self, obs: Observation) {
        self.state = Some(obs);
        self.done = false;
    }
}

impl Environment for Crossroad {
    fn name(&self) -> &'static str {
        "crossroad"
    }

    fn actions(&self) -> &[Action] {
        &ACTIONS
    }

    fn config(&self) -> &EnvConfig {
        &self.config
    }

    fn reset(&mut self, seed: u64) -> Observation {
        let obs = initial_observation(&self.config, seed);
        self.state = Some(obs.clone());
        self.done = false;
        obs
    }

    fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        if !ACTIONS.contains(&action) {
            return Err(EnvError::IllegalAction(action));
        }
        let current = match (&self.state, self.done) {
            (Some(s), false) => s,
            _ => return Err(EnvError::EpisodeFinished),
        };
        let (obs, collided) = advance(current, action);
        let won = !collided && obs.agent().is_some_and(|a| a.pos.y == 0);
        let reward = if collided {
            match self.config.reward_mode {
                RewardMode::Default => -1.0,
                RewardMode::ZeroOne => 0.0,
            }
        } else if won {
            1.0
        } else {
            0.0
        };
        let truncated = !collided && !won && obs.step_index >= self.config.max_steps;
        let done = collided || won || truncated;
        self.done = done;
        self.state = Some(obs.clone());
        Ok(StepResult {
            obs,
            reward,
            done,
            collided,
            truncated,
        })
    }

    fn model(&self) -> Arc<dyn ForwardModel> {
        Arc::new(CrossroadModel)
    }
}
