//! Training loop and experiment fan-out.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::learn::{learned_shield, LearnReport};
use super::metrics::{self, reward_shaping_compare, EpisodeMetrics, ShapingVerdict};
use super::registry::{AgentKind, ShieldSource};
use super::HarnessError;
use crate::agents::{selector, EpsilonSchedule, PolicyInput, RuleShield, SafetyCheck, Transition};
use crate::envs::{make_env, RewardMode};
use crate::rules::{self, RuleSet};

/// Safety checks available to the agents of one experiment.
#[derive(Clone, Default)]
pub struct Shields {
    pub rules: Option<Arc<dyn SafetyCheck>>,
    pub learned: Option<Arc<dyn SafetyCheck>>,
    pub learn_report: Option<LearnReport>,
}

impl Shields {
    /// Loads the rule set and trains the classifier only if some agent
    /// needs them.
    pub fn for_agents(config: &ExperimentConfig, kinds: &[AgentKind]) -> Result<Self, HarnessError> {
        let mut shields = Shields::default();
        if kinds.iter().any(|k| k.shield() == Some(ShieldSource::Rules)) {
            let rules = load_rules(config)?;
            shields.rules = Some(Arc::new(RuleShield::new(rules, config.qsr_params())));
        }
        if kinds.iter().any(|k| k.shield() == Some(ShieldSource::Learned)) {
            let (shield, report) = learned_shield(config)?;
            shields.learned = Some(Arc::new(shield));
            shields.learn_report = report;
        }
        Ok(shields)
    }

    fn get(&self, source: ShieldSource) -> Option<&dyn SafetyCheck> {
        match source {
            ShieldSource::Rules => self.rules.as_deref(),
            ShieldSource::Learned => self.learned.as_deref(),
        }
    }
}

pub fn load_rules(config: &ExperimentConfig) -> Result<RuleSet, HarnessError> {
    let src = &config.experiment.rules;
    if src == "builtin" {
        return rules::builtin(&config.experiment.env).ok_or_else(|| {
            HarnessError::Rules(format!("no built-in rules for `{}`", config.experiment.env))
        });
    }
    let path = Path::new(src);
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    rules::parse_rules(&text).map_err(|e| HarnessError::Rules(format!("{src}:{e}")))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub agent: String,
    pub seed: u64,
    pub episodes: Vec<EpisodeMetrics>,
    /// Executed actions the shield deemed unsafe although a safe action
    /// existed.
    pub violations: usize,
    /// Overrides that happened on greedy (non-exploration) steps.
    pub greedy_overrides: usize,
}

impl RunOutcome {
    pub fn rewards(&self) -> Vec<f64> {
        metrics::rewards(&self.episodes)
    }
}

/// Trains one agent for `experiment.episodes` episodes.
///
/// All randomness (network initialisation, exploration, tie-breaking) comes
/// from a stream seeded by `seed`; traffic layouts come from a second
/// stream, or are the `seed` layout throughout with `fixed_layout`.
pub fn train_run(
    config: &ExperimentConfig,
    kind: AgentKind,
    seed: u64,
    shields: &Shields,
) -> Result<RunOutcome, HarnessError> {
    let exp = &config.experiment;
    let mut env = make_env(&exp.env, config.env_config()?)?;
    let actions = env.actions().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layouts = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a70_u64);
    let mut learner = kind.learner(env.as_ref(), config, &mut rng);
    let policy = selector(kind.selector_name()).expect("registered selector");
    let shield = match kind.shield() {
        Some(src) => Some(shields.get(src).ok_or_else(|| {
            HarnessError::InvalidConfig(format!("agent `{kind}` needs a safety check that was not prepared"))
        })?),
        None => None,
    };
    let x = config.exploration;
    let decay = (x.decay_fraction * exp.episodes as f64).round() as u64;
    let schedule = EpsilonSchedule::new(x.epsilon_start, x.epsilon_end, decay);
    let penalty = kind.collision_penalty();

    let mut out = RunOutcome {
        agent: kind.to_string(),
        seed,
        episodes: Vec::with_capacity(exp.episodes),
        violations: 0,
        greedy_overrides: 0,
    };
    for episode in 0..exp.episodes {
        let started = exp.wall_time.then(Instant::now);
        let epsilon = schedule.value(episode as u64);
        let layout = if exp.fixed_layout { seed } else { layouts.gen() };
        let mut obs = env.reset(layout);
        let mut m = EpisodeMetrics {
            episode,
            reward: 0.0,
            steps: 0,
            deaths: 0,
            overrides: 0,
            ms: 0,
        };
        loop {
            let q = learner.q_values(&obs);
            let d = policy.select(
                &PolicyInput {
                    q_values: &q,
                    actions: &actions,
                    obs: &obs,
                    epsilon,
                    shield,
                },
                &mut rng,
            );
            let action = actions[d.action_index];
            if let Some(s) = shield {
                if !s.is_action_safe(&obs, action) && !s.safe_actions(&obs, &actions).is_empty() {
                    out.violations += 1;
                }
            }
            if d.overridden {
                m.overrides += 1;
                out.greedy_overrides += usize::from(!d.explored);
            }
            let step = env.step(action)?;
            let reward = step.reward + if step.collided { penalty } else { 0.0 };
            learner.observe(
                &Transition {
                    obs: &obs,
                    action: d.action_index,
                    reward,
                    next_obs: &step.obs,
                    terminal: step.done && !step.truncated,
                },
                &mut rng,
            );
            m.reward += reward;
            m.steps += 1;
            m.deaths += usize::from(step.collided);
            if step.done {
                break;
            }
            obs = step.obs;
        }
        if let Some(t) = started {
            m.ms = t.elapsed().as_millis() as u64;
        }
        out.episodes.push(m);
    }
    Ok(out)
}

pub fn write_csv(path: &Path, rows: &[EpisodeMetrics]) -> Result<(), HarnessError> {
    let csv_err = |e: csv::Error| HarnessError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<EpisodeMetrics>, HarnessError> {
    let csv_err = |e: csv::Error| HarnessError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().collect::<Vec<_>>().join(",");
    if header != metrics::CSV_HEADER {
        return Err(HarnessError::Csv {
            path: path.to_path_buf(),
            message: format!("unexpected header `{header}`"),
        });
    }
    r.deserialize().collect::<Result<_, _>>().map_err(csv_err)
}

pub fn run_csv_path(dir: &Path, agent: &str, seed: u64) -> PathBuf {
    dir.join(format!("{agent}_{seed}.csv"))
}

/// Per-run summary line.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SummaryRow {
    pub agent: String,
    pub seed: u64,
    pub episodes: usize,
    pub max_reward: f64,
    pub final_reward: f64,
    pub total_deaths: usize,
    pub total_overrides: usize,
    pub violations: usize,
    /// Episode at which the run first reaches its own best smoothed reward.
    pub episode_of_max: Option<usize>,
    /// Episode at which the run reaches the same-seed vanilla agent's best
    /// smoothed reward.
    pub episodes_to_baseline: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub runs: Vec<RunOutcome>,
    pub summary: Vec<SummaryRow>,
    pub out_dir: PathBuf,
    pub learn_report: Option<LearnReport>,
}

impl ExperimentResult {
    pub fn run(&self, agent: &str, seed: u64) -> Option<&RunOutcome> {
        self.runs.iter().find(|r| r.agent == agent && r.seed == seed)
    }

    /// Runs of one agent in seed order.
    pub fn by_agent(&self, agent: &str) -> Vec<&RunOutcome> {
        self.runs.iter().filter(|r| r.agent == agent).collect()
    }
}

pub fn summarise(runs: &[RunOutcome], window: usize) -> Vec<SummaryRow> {
    let index: BTreeMap<(String, u64), &RunOutcome> =
        runs.iter().map(|r| ((r.agent.clone(), r.seed), r)).collect();
    runs.iter()
        .map(|r| {
            let rewards = r.rewards();
            let base = AgentKind::parse(&r.agent)
                .ok()
                .map(|k| k.vanilla().to_string())
                .and_then(|name| index.get(&(name, r.seed)).copied());
            SummaryRow {
                agent: r.agent.clone(),
                seed: r.seed,
                episodes: r.episodes.len(),
                max_reward: metrics::max_smoothed(&rewards, window),
                final_reward: metrics::final_smoothed(&rewards, window),
                total_deaths: metrics::total_deaths(&r.episodes),
                total_overrides: r.episodes.iter().map(|m| m.overrides).sum(),
                violations: r.violations,
                episode_of_max: metrics::episode_of_max(&rewards, window),
                episodes_to_baseline: base
                    .and_then(|b| metrics::episodes_to_baseline(&b.rewards(), &rewards, window)),
            }
        })
        .collect()
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    let csv_err = |e: csv::Error| HarnessError::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Trains every configured agent on every seed (in parallel), writing
/// `<out>/<agent>_<seed>.csv` per run and `<out>/summary.csv`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let kinds = config
        .experiment
        .agents
        .iter()
        .map(|a| AgentKind::parse(a))
        .collect::<Result<Vec<_>, _>>()?;
    let shields = Shields::for_agents(config, &kinds)?;
    run_with_shields(config, &kinds, &shields)
}

pub fn run_with_shields(
    config: &ExperimentConfig,
    kinds: &[AgentKind],
    shields: &Shields,
) -> Result<ExperimentResult, HarnessError> {
    let out_dir = config.out_dir();
    fs::create_dir_all(&out_dir).map_err(|e| HarnessError::io(&out_dir, e))?;
    let jobs: Vec<(AgentKind, u64)> = kinds
        .iter()
        .flat_map(|&k| config.experiment.seeds.iter().map(move |&s| (k, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(k, s)| {
            let run = train_run(config, k, s, shields)?;
            write_csv(&run_csv_path(&out_dir, &run.agent, s), &run.episodes)?;
            Ok(run)
        })
        .collect::<Result<Vec<_>, HarnessError>>()?;
    let summary = summarise(&runs, config.experiment.window);
    write_summary(&out_dir.join("summary.csv"), &summary)?;
    Ok(ExperimentResult {
        runs,
        summary,
        out_dir,
        learn_report: shields.learn_report.clone(),
    })
}

pub const SHAPING_AGENTS: [&str; 4] = ["dqn", "dqn+ge", "dqn+fg", "dqn+negreward"];

/// Reward-shaping comparison: the DQN family on zero-one rewards, where only
/// the penalised agent ever sees a negative reward. Writes `shaping.csv`.
pub fn run_shaping(config: &ExperimentConfig) -> Result<(ExperimentResult, ShapingVerdict), HarnessError> {
    let mut cfg = config.clone();
    cfg.experiment.agents = SHAPING_AGENTS.iter().map(|s| s.to_string()).collect();
    cfg.env.reward_mode = Some(RewardMode::ZeroOne);
    let result = run_experiment(&cfg)?;
    let seeds = &cfg.experiment.seeds;
    let series = |agent: &str| -> Vec<Vec<f64>> {
        seeds
            .iter()
            .map(|&s| result.run(agent, s).expect("run exists").rewards())
            .collect()
    };
    let verdict = reward_shaping_compare(
        &series("dqn+negreward"),
        &[series("dqn+ge"), series("dqn+fg")],
        cfg.experiment.window,
    );
    let path = result.out_dir.join("shaping.csv");
    let mut text = String::from("seed,negreward_final,safe_min_final,negreward_below\n");
    for (i, s) in seeds.iter().enumerate() {
        text.push_str(&format!(
            "{s},{},{},{}\n",
            verdict.shaped[i], verdict.safe_min[i], verdict.per_seed[i]
        ));
    }
    text.push_str(&format!("aggregate,,,{}\n", verdict.aggregate));
    fs::write(&path, text).map_err(|e| HarnessError::io(&path, e))?;
    Ok((result, verdict))
}

