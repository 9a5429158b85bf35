//! Rule-learning pipeline: collect random-play data, fit the classifier,
//! and compare it with the hand-written rules.

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::agents::SafetyCheck;
use crate::envs::{make_env, Environment};
use crate::learner::{collect_dataset, train_logistic, FeatureSpace, LearnedShield, LogisticModel};

#[derive(Clone, Debug, PartialEq)]
pub struct LearnReport {
    pub examples: usize,
    pub unsafe_rate: f64,
    pub accuracy: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub degenerate: bool,
}

/// Trains (or loads, when `rule_learner.model` is set) the classifier for
/// the configured environment.
pub fn learned_shield(config: &ExperimentConfig) -> Result<(LearnedShield, Option<LearnReport>), HarnessError> {
    let mut env = make_env(&config.experiment.env, config.env_config()?)?;
    let features = FeatureSpace::default();
    let qsr = config.qsr_params();
    let rl = &config.rule_learner;
    if let Some(path) = &rl.model {
        let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
        let model = LogisticModel::load(&mut BufReader::new(file))?;
        if model.len() != features.len() {
            return Err(crate::learner::LearnerError::FeatureLength {
                expected: features.len(),
                found: model.len(),
            }
            .into());
        }
        return Ok((LearnedShield::new(model, features, qsr, env.model()), None));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rl.seed);
    let data = collect_dataset(env.as_mut(), qsr, &features, rl.episodes, &mut rng);
    let (mut model, fit) = train_logistic(&data.examples, features.len(), rl.step_size, rl.epochs)?;
    model.threshold = rl.threshold;
    let report = LearnReport {
        examples: data.examples.len(),
        unsafe_rate: data.unsafe_rate(),
        accuracy: model.accuracy(&data.examples),
        initial_loss: fit.losses[0],
        final_loss: *fit.losses.last().unwrap(),
        degenerate: model.degenerate,
    };
    Ok((LearnedShield::new(model, features, qsr, env.model()), Some(report)))
}

/// Fraction of `n_pairs` state-action pairs on which two checks agree.
/// States come from uniformly random play over fresh seeds; each visited
/// state is paired with the random action then taken.
pub fn agreement(
    a: &dyn SafetyCheck,
    b: &dyn SafetyCheck,
    env: &mut dyn Environment,
    n_pairs: usize,
    rng: &mut dyn RngCore,
) -> f64 {
    let actions = env.actions().to_vec();
    let mut same = 0;
    let mut seen = 0;
    while seen < n_pairs {
        let mut obs = env.reset(rng.gen());
        loop {
            let act = *actions.choose(rng).expect("environment has actions");
            same += usize::from(a.is_action_safe(&obs, act) == b.is_action_safe(&obs, act));
            seen += 1;
            if seen == n_pairs {
                break;
            }
            let step = env.step(act).expect("episode is running");
            if step.done {
                break;
            }
            obs = step.obs;
        }
    }
    same as f64 / n_pairs.max(1) as f64
}

pub fn shared(shield: LearnedShield) -> Arc<dyn SafetyCheck> {
    Arc::new(shield)
}
