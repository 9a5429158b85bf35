//! Pluggable safety checks consulted by the safe action selectors.

use rand::seq::SliceRandom;
use rand::RngCore;

use crate::action::Action;
use crate::envs::Observation;
use crate::qsr::{extract_relations, QsrParams, SymbolicState};
use crate::rules::{self, RuleSet};

/// Decides whether an action is safe in an observed state.
///
/// Rule-based and learned checks share this contract, so the guided
/// selectors work with either.
pub trait SafetyCheck: Send + Sync {
    fn name(&self) -> &str;

    fn is_action_safe(&self, obs: &Observation, action: Action) -> bool;

    /// Safe subset of `actions`, in input order.
    fn safe_actions(&self, obs: &Observation, actions: &[Action]) -> Vec<Action> {
        actions
            .iter()
            .copied()
            .filter(|&a| self.is_action_safe(obs, a))
            .collect()
    }
}

/// Uniform over the safe actions, or over all actions when none is safe.
pub fn random_safe_action(
    check: &dyn SafetyCheck,
    obs: &Observation,
    actions: &[Action],
    rng: &mut dyn RngCore,
) -> Action {
    let safe = check.safe_actions(obs, actions);
    let pool = if safe.is_empty() { actions } else { &safe };
    *pool.choose(rng).expect("action set is nonempty")
}

/// Hand-written rules evaluated over extracted spatial relations.
#[derive(Clone, Debug)]
pub struct RuleShield {
    rules: RuleSet,
    qsr: QsrParams,
}

impl RuleShield {
    pub fn new(rules: RuleSet, qsr: QsrParams) -> Self {
        Self { rules, qsr }
    }

    pub fn rules(&self) -> &RuleSet {
        &self.rules
    }

    // An observation without an agent has no agent-centric relations, so no
    // rule can fire on it.
    fn symbolic(&self, obs: &Observation) -> SymbolicState {
        extract_relations(obs, self.qsr).unwrap_or_default()
    }
}

impl SafetyCheck for RuleShield {
    fn name(&self) -> &str {
        "rules"
    }

    fn is_action_safe(&self, obs: &Observation, action: Action) -> bool {
        rules::is_action_safe(&self.symbolic(obs), action, &self.rules)
    }

    fn safe_actions(&self, obs: &Observation, actions: &[Action]) -> Vec<Action> {
        rules::safe_actions(&self.symbolic(obs), actions, &self.rules)
    }
}
