//! Action-selection strategies.
//!
//! All selectors draw `n ~ U[0, 1)` first and explore when `n < epsilon`;
//! they differ only in how much of the decision the safety check may veto:
//!
//! * `epsilon-greedy`: no veto.
//! * `guided`: exploratory actions are drawn from the safe set.
//! * `full-guidance`: greedy actions are also replaced when unsafe.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use super::shield::{random_safe_action, SafetyCheck};
use crate::action::Action;
use crate::envs::Observation;

pub struct PolicyInput<'a> {
    pub q_values: &'a [f64],
    pub actions: &'a [Action],
    pub obs: &'a Observation,
    pub epsilon: f64,
    pub shield: Option<&'a dyn SafetyCheck>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decision {
    pub action_index: usize,
    pub explored: bool,
    /// The safety check replaced the proposed action.
    pub overridden: bool,
}

pub trait ActionSelector: Send + Sync {
    fn name(&self) -> &'static str;
    fn select(&self, input: &PolicyInput<'_>, rng: &mut dyn RngCore) -> Decision;
}

/// Index of the largest value, ties broken uniformly.
pub fn argmax_random_tie(values: &[f64], rng: &mut dyn RngCore) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
    match ties.len() {
        0 => 0,
        1 => ties[0],
        _ => *ties.choose(rng).unwrap(),
    }
}

fn index_of(actions: &[Action], a: Action) -> usize {
    actions.iter().position(|&x| x == a).expect("selected action is in the action set")
}

/// Uniform proposal; an unsafe proposal is replaced by a uniform safe action.
/// The result is uniform over the safe set whenever that set is nonempty.
fn safe_explore(input: &PolicyInput<'_>, rng: &mut dyn RngCore) -> Decision {
    let proposal = rng.gen_range(0..input.actions.len());
    match input.shield {
        Some(shield) if !shield.is_action_safe(input.obs, input.actions[proposal]) => {
            let a = random_safe_action(shield, input.obs, input.actions, rng);
            Decision {
                action_index: index_of(input.actions, a),
                explored: true,
                overridden: true,
            }
        }
        _ => Decision {
            action_index: proposal,
            explored: true,
            overridden: false,
        },
    }
}

fn greedy(input: &PolicyInput<'_>, rng: &mut dyn RngCore) -> Decision {
    Decision {
        action_index: argmax_random_tie(input.q_values, rng),
        explored: false,
        overridden: false,
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EpsilonGreedy;

impl ActionSelector for EpsilonGreedy {
    fn name(&self) -> &'static str {
        "epsilon-greedy"
    }

    fn select(&self, input: &PolicyInput<'_>, rng: &mut dyn RngCore) -> Decision {
        if rng.gen::<f64>() < input.epsilon {
            Decision {
                action_index: rng.gen_range(0..input.actions.len()),
                explored: true,
                overridden: false,
            }
        } else {
            greedy(input, rng)
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct GuidedExploration;

impl ActionSelector for GuidedExploration {
    fn name(&self) -> &'static str {
        "guided"
    }

    fn select(&self, input: &PolicyInput<'_>, rng: &mut dyn RngCore) -> Decision {
        if rng.gen::<f64>() < input.epsilon {
            safe_explore(input, rng)
        } else {
            greedy(input, rng)
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct FullGuidance;

impl ActionSelector for FullGuidance {
    fn name(&self) -> &'static str {
        "full-guidance"
    }

    fn select(&self, input: &PolicyInput<'_>, rng: &mut dyn RngCore) -> Decision {
        if rng.gen::<f64>() < input.epsilon {
            return safe_explore(input, rng);
        }
        let d = greedy(input, rng);
        match input.shield {
            Some(shield) if !shield.is_action_safe(input.obs, input.actions[d.action_index]) => {
                let a = random_safe_action(shield, input.obs, input.actions, rng);
                Decision {
                    action_index: index_of(input.actions, a),
                    explored: false,
                    overridden: true,
                }
            }
            _ => d,
        }
    }
}

pub const SELECTORS: [&str; 3] = ["epsilon-greedy", "guided", "full-guidance"];

/// Looks up a registered selector by name.
pub fn selector(name: &str) -> Option<Box<dyn ActionSelector>> {
    match name {
        "epsilon-greedy" => Some(Box::new(EpsilonGreedy)),
        "guided" => Some(Box::new(GuidedExploration)),
        "full-guidance" => Some(Box::new(FullGuidance)),
        _ => None,
    }
}

/// Linear decay from `start` to `end` over `decay_steps` ticks, then flat.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl EpsilonSchedule {
    pub fn new(start: f64, end: f64, decay_steps: u64) -> Self {
        assert!((0.0..=1.0).contains(&start) && (0.0..=1.0).contains(&end) && end <= start);
        Self {
            start,
            end,
            decay_steps,
        }
    }

    pub fn value(&self, t: u64) -> f64 {
        if self.decay_steps == 0 || t >= self.decay_steps {
            return self.end;
        }
        let frac = t as f64 / self.decay_steps as f64;
        (self.start + (self.end - self.start) * frac).clamp(self.end, self.start)
    }
}
