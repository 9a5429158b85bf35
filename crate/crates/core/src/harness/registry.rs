//! Agent kinds by name.
//!
//! A name is a learner base optionally followed by one modifier:
//!
//! | name            | learner | selector         | safety check | reward      |
//! |-----------------|---------|------------------|--------------|-------------|
//! | `q`, `dqn`      | base    | `epsilon-greedy` | none         | env         |
//! | `*+ge`          | base    | `guided`         | rules        | env         |
//! | `*+fg`          | base    | `full-guidance`  | rules        | env         |
//! | `*+negreward`   | base    | `epsilon-greedy` | none         | env, -1 per collision |
//! | `*+learnedrule` | base    | `guided`         | learned      | env         |

use std::fmt;

use rand::RngCore;

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::agents::features::feature_len;
use crate::agents::{DqnAgent, LearningRate, QTable, TabularAgent, ValueLearner};
use crate::envs::Environment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Base {
    Tabular,
    Dqn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modifier {
    Vanilla,
    Guided,
    FullGuidance,
    NegReward,
    LearnedRule,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ShieldSource {
    Rules,
    Learned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AgentKind {
    pub base: Base,
    pub modifier: Modifier,
}

/// The agent names used in the experiments.
pub const AGENTS: [&str; 8] = [
    "q",
    "q+ge",
    "q+fg",
    "dqn",
    "dqn+ge",
    "dqn+fg",
    "dqn+negreward",
    "q+learnedrule",
];

impl AgentKind {
    pub fn parse(name: &str) -> Result<Self, HarnessError> {
        let (base, modifier) = match name.split_once('+') {
            Some((_, "")) => return Err(HarnessError::UnknownAgent(name.to_string())),
            Some(pair) => pair,
            None => (name, ""),
        };
        let base = match base {
            "q" => Base::Tabular,
            "dqn" => Base::Dqn,
            _ => return Err(HarnessError::UnknownAgent(name.to_string())),
        };
        let modifier = match modifier {
            "" => Modifier::Vanilla,
            "ge" => Modifier::Guided,
            "fg" => Modifier::FullGuidance,
            "negreward" => Modifier::NegReward,
            "learnedrule" => Modifier::LearnedRule,
            _ => return Err(HarnessError::UnknownAgent(name.to_string())),
        };
        Ok(Self { base, modifier })
    }

    pub fn selector_name(&self) -> &'static str {
        match self.modifier {
            Modifier::Vanilla | Modifier::NegReward => "epsilon-greedy",
            Modifier::Guided | Modifier::LearnedRule => "guided",
            Modifier::FullGuidance => "full-guidance",
        }
    }

    pub fn shield(&self) -> Option<ShieldSource> {
        match self.modifier {
            Modifier::Vanilla | Modifier::NegReward => None,
            Modifier::Guided | Modifier::FullGuidance => Some(ShieldSource::Rules),
            Modifier::LearnedRule => Some(ShieldSource::Learned),
        }
    }

    /// Extra reward added on every collision.
    pub fn collision_penalty(&self) -> f64 {
        if self.modifier == Modifier::NegReward {
            -1.0
        } else {
            0.0
        }
    }

    /// The unmodified agent of the same learner family.
    pub fn vanilla(&self) -> Self {
        Self {
            base: self.base,
            modifier: Modifier::Vanilla,
        }
    }

    /// Builds a fresh learner for `env`.
    pub fn learner(
        &self,
        env: &dyn Environment,
        config: &ExperimentConfig,
        rng: &mut dyn RngCore,
    ) -> Box<dyn ValueLearner> {
        let n_actions = env.actions().len();
        match self.base {
            Base::Tabular => {
                let t = config.tabular;
                let rate = if t.alpha == 0.0 {
                    LearningRate::InverseVisit
                } else {
                    LearningRate::Constant(t.alpha)
                };
                Box::new(TabularAgent::new(QTable::new(n_actions, rate, t.gamma)))
            }
            Base::Dqn => Box::new(DqnAgent::new(
                feature_len(env.config().lanes.len()),
                n_actions,
                &config.dqn,
                rng,
            )),
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.base {
            Base::Tabular => "q",
            Base::Dqn => "dqn",
        })?;
        f.write_str(match self.modifier {
            Modifier::Vanilla => "",
            Modifier::Guided => "+ge",
            Modifier::FullGuidance => "+fg",
            Modifier::NegReward => "+negreward",
            Modifier::LearnedRule => "+learnedrule",
        })
    }
}
