use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use super::FeatureSpace;
use crate::envs::Environment;
use crate::qsr::{extract_relations, QsrParams};

/// Sparse binary feature vector with its collision label.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabeledExample {
    /// Sorted indices of the indicators that are 1.
    pub active: Vec<usize>,
    pub collided: bool,
}

impl LabeledExample {
    pub fn new(active: Vec<usize>, collided: bool) -> Self {
        Self { active, collided }
    }

    pub fn dense(&self, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        for &i in &self.active {
            v[i] = 1.0;
        }
        v
    }

    pub fn label(&self) -> f64 {
        if self.collided {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub examples: Vec<LabeledExample>,
    pub episodes: usize,
    pub steps: usize,
    pub collisions: usize,
}

impl Dataset {
    pub fn unsafe_rate(&self) -> f64 {
        if self.examples.is_empty() {
            return 0.0;
        }
        self.examples.iter().filter(|e| e.collided).count() as f64 / self.examples.len() as f64
    }
}

/// Plays `n_episodes` with a uniformly random policy, each from a fresh
/// seed drawn from `rng`. Every step contributes the successor state's
/// features, labelled unsafe iff that step collided.
pub fn collect_dataset(
    env: &mut dyn Environment,
    qsr: QsrParams,
    features: &FeatureSpace,
    n_episodes: usize,
    rng: &mut dyn RngCore,
) -> Dataset {
    let actions = env.actions().to_vec();
    let mut data = Dataset {
        episodes: n_episodes,
        ..Dataset::default()
    };
    for _ in 0..n_episodes {
        env.reset(rng.gen());
        loop {
            let a = *actions.choose(rng).expect("environment has actions");
            let step = env.step(a).expect("episode is running");
            let state = extract_relations(&step.obs, qsr).unwrap_or_default();
            data.examples
                .push(LabeledExample::new(features.active(&state), step.collided));
            data.steps += 1;
            data.collisions += usize::from(step.collided);
            if step.done {
                break;
            }
        }
    }
    data
}
