use std::sync::Arc;

use super::{
    advance, initial_observation, EnvConfig, EnvError, Environment, ForwardModel, Observation,
    StepResult,
};
use crate::action::Action;

const ACTIONS: [Action; 3] = [Action::Up, Action::Down, Action::Noop];

/// Grid analog of Atari Freeway: cross as often as possible before time runs
/// out.
///
/// A collision knocks the agent back to the start cell without ending the
/// episode; each crossing pays +1 and also returns the agent to the start.
#[derive(Clone, Debug)]
pub struct FreewayGrid {
    config: EnvConfig,
    state: Option<Observation>,
    done: bool,
}

struct FreewayModel {
    start: super::GridPoint,
}

impl FreewayModel {
    fn transition(&self, obs: &Observation, action: Action) -> (Observation, bool, bool) {
        let (mut next, collided) = advance(obs, action);
        let crossed = !collided && next.agent().is_some_and(|a| a.pos.y == 0);
        if collided || crossed {
            if let Some(agent) = next.agent_mut() {
                agent.pos = self.start;
            }
        }
        (next, collided, crossed)
    }
}

impl ForwardModel for FreewayModel {
    fn predict(&self, obs: &Observation, action: Action) -> (Observation, bool) {
        let (next, collided, _) = self.transition(obs, action);
        (next, collided)
    }
}

impl FreewayGrid {
    pub fn new(config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        Ok(Self {
            config,
            state: None,
            done: false,
        })
    }

    pub fn set_state(&mut self, obs: Observation) {
        self.state = Some(obs);
        self.done = false;
    }

    fn dynamics(&self) -> FreewayModel {
        FreewayModel {
            start: self.config.start_point(),
        }
    }
}

impl Environment for FreewayGrid {
    fn name(&self) -> &'static str {
        "freeway"
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
        let (obs, collided, crossed) = self.dynamics().transition(current, action);
        let done = obs.step_index >= self.config.max_steps;
        self.done = done;
        self.state = Some(obs.clone());
        Ok(StepResult {
            obs,
            reward: if crossed { 1.0 } else { 0.0 },
            done,
            collided,
            truncated: done,
        })
    }

    fn model(&self) -> Arc<dyn ForwardModel> {
        Arc::new(self.dynamics())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::GridPoint;

    #[test]
    fn collision_sends_agent_home_without_ending() {
        let mut e = FreewayGrid::new(EnvConfig::freeway()).unwrap();
        let mut obs = e.reset(3);
        // lane in row 5 heads right
        obs.objects[0].pos = GridPoint::new(4, 6);
        obs.objects[5].pos = GridPoint::new(3, 5);
        e.set_state(obs);
        let r = e.step(Action::Up).unwrap();
        assert!(r.collided && !r.done);
        assert_eq!(r.reward, 0.0);
        assert_eq!(r.obs.agent().unwrap().pos, GridPoint::new(4, 11));
    }

    #[test]
    fn crossing_pays_and_restarts() {
        let mut e = FreewayGrid::new(EnvConfig::freeway()).unwrap();
        let mut obs = e.reset(3);
        obs.objects[0].pos = GridPoint::new(4, 1);
        obs.objects[1].pos = GridPoint::new(0, 1);
        e.set_state(obs);
        let r = e.step(Action::Up).unwrap();
        assert_eq!(r.reward, 1.0);
        assert!(!r.done);
        assert_eq!(r.obs.agent().unwrap().pos.y, 11);
    }

    #[test]
    fn ends_only_at_step_cap() {
        let mut cfg = EnvConfig::freeway();
        cfg.max_steps = 5;
        let mut e = FreewayGrid::new(cfg).unwrap();
        e.reset(0);
        for i in 0..5 {
            let r = e.step(Action::Noop).unwrap();
            assert_eq!(r.done, i == 4);
        }
    }

    #[test]
    fn only_vertical_actions() {
        let mut e = FreewayGrid::new(EnvConfig::freeway()).unwrap();
        e.reset(0);
        assert!(e.step(Action::Left).is_err());
    }
}
