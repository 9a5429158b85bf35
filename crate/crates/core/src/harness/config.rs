//! Experiment configuration, loaded from TOML with one table per component.
//!
//! ```toml
//! [experiment]
//! env = "crossroad"
//! agents = ["q", "q+ge", "q+fg"]
//! episodes = 5000
//! seeds = [1, 2, 3, 4, 5]
//!
//! [dqn]
//! hidden = [64, 64]
//! ```
//!
//! Every key is optional; omitted keys take the defaults below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agents::DqnConfig;
use crate::envs::{default_config, EnvConfig, Lane, RewardMode};
use crate::qsr::QsrParams;

use super::HarnessError;

/// Environment variable that overrides `experiment.out_dir`.
pub const OUT_DIR_ENV: &str = "SAFERL_OUT_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub env: String,
    pub agents: Vec<String>,
    pub episodes: usize,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    /// `builtin` for the shipped rules of `env`, otherwise a rule-file path.
    pub rules: String,
    /// Smoothing window for summaries.
    pub window: usize,
    /// Reset every episode of a run to the run seed's traffic layout.
    pub fixed_layout: bool,
    /// Record per-episode wall time; off keeps CSVs byte-reproducible.
    pub wall_time: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            env: "crossroad".into(),
            agents: vec!["q".into(), "q+ge".into(), "q+fg".into()],
            episodes: 5_000,
            seeds: vec![1, 2, 3, 4, 5],
            out_dir: PathBuf::from("runs"),
            rules: "builtin".into(),
            window: 100,
            fixed_layout: true,
            wall_time: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TabularSection {
    /// Constant step size; `0` selects `1 / visit count`.
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for TabularSection {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            gamma: 0.99,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplorationSection {
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the episode budget over which epsilon decays linearly.
    pub decay_fraction: f64,
}

impl Default for ExplorationSection {
    fn default() -> Self {
        Self {
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            decay_fraction: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleLearnerSection {
    pub episodes: usize,
    pub step_size: f64,
    pub epochs: usize,
    pub threshold: f64,
    pub seed: u64,
    /// Load a saved model instead of training one.
    pub model: Option<PathBuf>,
}

impl Default for RuleLearnerSection {
    fn default() -> Self {
        Self {
            episodes: 10_000,
            step_size: 5.0,
            epochs: 2_000,
            threshold: 0.5,
            seed: 0,
            model: None,
        }
    }
}

/// Overrides applied on top of the environment's own defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lanes: Option<Vec<Lane>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub car_speed: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward_mode: Option<RewardMode>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub env: EnvSection,
    /// Relation extraction settings; defaults depend on `experiment.env`.
    pub qsr: Option<QsrParams>,
    #[serde(default)]
    pub tabular: TabularSection,
    #[serde(default)]
    pub dqn: DqnConfig,
    #[serde(default)]
    pub exploration: ExplorationSection,
    #[serde(default)]
    pub rule_learner: RuleLearnerSection,
}


impl ExperimentConfig {
    pub fn from_toml(src: &str) -> Result<Self, HarnessError> {
        toml::from_str(src).map_err(|e| HarnessError::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let src = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&src)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serialises")
    }

    /// Environment config in effect.
    pub fn env_config(&self) -> Result<EnvConfig, HarnessError> {
        let mut c = default_config(&self.experiment.env).map_err(HarnessError::Env)?;
        let o = self.env.clone();
        c.width = o.width.unwrap_or(c.width);
        c.height = o.height.unwrap_or(c.height);
        c.lanes = o.lanes.unwrap_or(c.lanes);
        c.car_speed = o.car_speed.unwrap_or(c.car_speed);
        c.max_steps = o.max_steps.unwrap_or(c.max_steps);
        c.reward_mode = o.reward_mode.unwrap_or(c.reward_mode);
        Ok(c)
    }

    /// Relation settings in effect. The shipped grid rules assume cars are
    /// `close` only when adjacent and a road that wraps horizontally, so the
    /// grid environments default to `d_close = 1` with wrapping.
    pub fn qsr_params(&self) -> QsrParams {
        self.qsr.unwrap_or(match self.experiment.env.as_str() {
            "crossroad" | "freeway" => QsrParams::new(1, 2).wrapping(),
            _ => QsrParams::default(),
        })
    }

    /// Output directory, honouring [`OUT_DIR_ENV`].
    pub fn out_dir(&self) -> PathBuf {
        match std::env::var_os(OUT_DIR_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.experiment.out_dir.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidConfig(m.to_string()));
        let e = &self.experiment;
        if e.seeds.is_empty() {
            return bad("experiment.seeds must not be empty");
        }
        if e.agents.is_empty() {
            return bad("experiment.agents must not be empty");
        }
        if e.episodes == 0 {
            return bad("experiment.episodes must be at least 1");
        }
        if e.window == 0 {
            return bad("experiment.window must be at least 1");
        }
        let x = &self.exploration;
        if !(0.0..=1.0).contains(&x.epsilon_start)
            || !(0.0..=1.0).contains(&x.epsilon_end)
            || x.epsilon_end > x.epsilon_start
        {
            return bad("exploration needs 0 <= epsilon_end <= epsilon_start <= 1");
        }
        if !(0.0..=1.0).contains(&x.decay_fraction) {
            return bad("exploration.decay_fraction must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.tabular.gamma) || !(0.0..1.0).contains(&self.dqn.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.tabular.alpha) {
            return bad("tabular.alpha must lie in [0, 1]");
        }
        if self.dqn.batch_size == 0 || self.dqn.buffer_capacity < self.dqn.batch_size {
            return bad("dqn needs 1 <= batch_size <= buffer_capacity");
        }
        if self.qsr_params().d_close == 0 {
            return bad("qsr.d_close must be at least 1");
        }
        for a in &e.agents {
            super::registry::AgentKind::parse(a)?;
        }
        self.env_config()?.validate().map_err(HarnessError::Env)
    }
}
