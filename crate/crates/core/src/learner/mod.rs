//! Learned safety checks.
//!
//! Random play is recorded as symbolic successor states labelled by whether
//! the step collided; a logistic-regression classifier trained on them then
//! stands in for the hand-written rules through the forward model.

mod dataset;
mod logistic;

pub use dataset::{collect_dataset, Dataset, LabeledExample};
pub use logistic::{train_logistic, LogisticModel, TrainReport};

use std::sync::Arc;

use crate::action::Action;
use crate::agents::SafetyCheck;
use crate::envs::{ForwardModel, Observation};
use crate::qsr::{extract_relations, Direction, Distance, QsrParams, SymbolicState};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LearnerError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("feature vector has length {found}, model expects {expected}")]
    FeatureLength { expected: usize, found: usize },
}

/// One-hot layout over agent-centric relation patterns.
///
/// Each object in the extraction region activates the indicator for its
/// `(direction, distance, type, heading)` combination, crossed with the
/// agent's own heading. Stationary objects use `same` as their heading. The
/// layout is `(((dir * 2 + dist) * n_types + type) * 9 + heading) * 9 +
/// agent_heading`, with directions and headings in [`Direction::ALL`] order
/// and `close` before `far`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FeatureSpace {
    types: Vec<String>,
}

impl Default for FeatureSpace {
    fn default() -> Self {
        Self::new(&["car"])
    }
}

const N_DIR: usize = Direction::ALL.len();

impl FeatureSpace {
    pub fn new(types: &[&str]) -> Self {
        Self {
            types: types.iter().map(|t| t.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        N_DIR * 2 * self.types.len() * N_DIR * N_DIR
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn index(
        &self,
        dir: Direction,
        dist: Distance,
        type_index: usize,
        heading: Direction,
        agent_heading: Direction,
    ) -> usize {
        let d = match dist {
            Distance::Close => 0,
            Distance::Far => 1,
        };
        ((((dir.index() * 2 + d) * self.types.len() + type_index) * N_DIR + heading.index()) * N_DIR)
            + agent_heading.index()
    }

    /// Sorted active indicator positions for a symbolic state. Objects of an
    /// unknown type, or lacking a direction or distance fact, are skipped.
    pub fn active(&self, state: &SymbolicState) -> Vec<usize> {
        let heading_of = |obj: &str| {
            state
                .with_predicate("heading")
                .find(|r| r.subject == obj)
                .and_then(|r| Direction::from_name(&r.object))
                .unwrap_or(Direction::Same)
        };
        // The agent is the subject of every distance fact.
        let agent_heading = state
            .with_predicate("close")
            .chain(state.with_predicate("far"))
            .next()
            .map_or(Direction::Same, |r| heading_of(&r.subject));
        let mut out = Vec::new();
        for t in state.with_predicate("type") {
            let Some(ti) = self.types.iter().position(|x| *x == t.object) else {
                continue;
            };
            let obj = t.subject.as_str();
            let dir = Direction::ALL.into_iter().find(|d| {
                state
                    .with_predicate(d.name())
                    .any(|r| r.object == obj && r.subject != obj)
            });
            let dist = if state.with_predicate("close").any(|r| r.object == obj) {
                Some(Distance::Close)
            } else if state.with_predicate("far").any(|r| r.object == obj) {
                Some(Distance::Far)
            } else {
                None
            };
            if let (Some(dir), Some(dist)) = (dir, dist) {
                out.push(self.index(dir, dist, ti, heading_of(obj), agent_heading));
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn dense(&self, state: &SymbolicState) -> Vec<f64> {
        let mut v = vec![0.0; self.len()];
        for i in self.active(state) {
            v[i] = 1.0;
        }
        v
    }
}

/// Safety check backed by a trained classifier: an action is safe when the
/// predicted successor state is classified safe.
pub struct LearnedShield {
    model: LogisticModel,
    features: FeatureSpace,
    qsr: QsrParams,
    forward: Arc<dyn ForwardModel>,
}

impl LearnedShield {
    pub fn new(model: LogisticModel, features: FeatureSpace, qsr: QsrParams, forward: Arc<dyn ForwardModel>) -> Self {
        Self {
            model,
            features,
            qsr,
            forward,
        }
    }

    pub fn model(&self) -> &LogisticModel {
        &self.model
    }

    /// Probability that taking `action` in `obs` leads to an unsafe state.
    pub fn unsafe_probability(&self, obs: &Observation, action: Action) -> f64 {
        let (next, _) = self.forward.predict(obs, action);
        let state = extract_relations(&next, self.qsr).unwrap_or_default();
        self.model.predict_sparse(&self.features.active(&state))
    }
}

impl SafetyCheck for LearnedShield {
    fn name(&self) -> &str {
        "learned"
    }

    fn is_action_safe(&self, obs: &Observation, action: Action) -> bool {
        self.unsafe_probability(obs, action) <= self.model.threshold
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsr::Relation;

    #[test]
    fn single_car_activates_one_indicator() {
        let fs = FeatureSpace::default();
        assert_eq!(fs.len(), 1458);
        let state: SymbolicState = [
            Relation::new("nw", "agent", "car1"),
            Relation::new("close", "agent", "car1"),
            Relation::new("type", "car1", "car"),
            Relation::new("heading", "car1", "e"),
        ]
        .into_iter()
        .collect();
        assert_eq!(
            fs.active(&state),
            vec![fs.index(Direction::NW, Distance::Close, 0, Direction::E, Direction::Same)]
        );
        assert!(fs.active(&SymbolicState::new()).is_empty());
        let mut moving = state.clone();
        moving.insert(Relation::new("heading", "agent", "n"));
        assert_eq!(
            fs.active(&moving),
            vec![fs.index(Direction::NW, Distance::Close, 0, Direction::E, Direction::N)]
        );
    }

    #[test]
    fn indices_are_distinct() {
        let fs = FeatureSpace::new(&["car", "truck"]);
        let mut seen = std::collections::BTreeSet::new();
        for d in Direction::ALL {
            for dist in [Distance::Close, Distance::Far] {
                for t in 0..2 {
                    for h in Direction::ALL {
                        for ah in Direction::ALL {
                            assert!(seen.insert(fs.index(d, dist, t, h, ah)));
                        }
                    }
                }
            }
        }
        assert_eq!(seen.len(), fs.len());
        assert_eq!(*seen.iter().next_back().unwrap(), fs.len() - 1);
    }
}
