use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use saferl::agents::RuleShield;
use saferl::envs::make_env;
use saferl::harness::learn::{agreement, learned_shield};
use saferl::harness::report::{learning_curve_svg, load_runs, summary_table};
use saferl::harness::run::load_rules;
use saferl::harness::{run_experiment, run_shaping, ExperimentConfig};

#[derive(Parser)]
#[command(name = "saferl", about = "Safe exploration experiments on grid traffic worlds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config file; every key is optional.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Environment name (crossroad, freeway).
    #[arg(long)]
    env: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory (SAFERL_OUT_DIR takes precedence).
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Rule file, or `builtin`.
    #[arg(long)]
    rules: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one agent.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        agent: String,
    },
    /// Train a matrix of agents under identical settings.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated agent names; defaults to the config's list.
        #[arg(long, value_delimiter = ',')]
        agents: Option<Vec<String>>,
    },
    /// Reward-shaping comparison of the DQN family.
    Shape {
        #[command(flatten)]
        common: Common,
    },
    /// Learn a safety classifier and compare it with the hand-written rules.
    LearnRules {
        #[command(flatten)]
        common: Common,
        /// Where to save the trained model.
        #[arg(long)]
        save: Option<PathBuf>,
        /// State-action pairs for the agreement check.
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
    },
    /// Summarise a directory of run CSVs.
    Report {
        dir: PathBuf,
        #[arg(long, default_value_t = 100)]
        window: usize,
        /// Write learning curves to this SVG file.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Print the effective configuration as TOML.
    Config {
        #[command(flatten)]
        common: Common,
    },
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let e = &mut cfg.experiment;
    if let Some(v) = &c.env {
        e.env = v.clone();
    }
    if let Some(v) = c.episodes {
        e.episodes = v;
    }
    if let Some(v) = &c.seeds {
        e.seeds = v.clone();
    }
    if let Some(v) = &c.out {
        e.out_dir = v.clone();
    }
    if let Some(v) = &c.rules {
        e.rules = v.clone();
    }
    Ok(cfg)
}

fn compare(cfg: &ExperimentConfig) -> Result<()> {
    let result = run_experiment(cfg)?;
    if let Some(r) = &result.learn_report {
        println!(
            "classifier: {} examples, unsafe rate {:.4}, accuracy {:.4}",
            r.examples, r.unsafe_rate, r.accuracy
        );
    }
    let runs = load_runs(&result.out_dir)?;
    print!("{}", summary_table(&runs, cfg.experiment.window));
    println!("wrote {}", result.out_dir.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common, agent } => {
            let mut cfg = load_config(&common)?;
            cfg.experiment.agents = vec![agent];
            compare(&cfg)
        }
        Command::Compare { common, agents } => {
            let mut cfg = load_config(&common)?;
            if let Some(a) = agents {
                cfg.experiment.agents = a;
            }
            compare(&cfg)
        }
        Command::Shape { common } => {
            let cfg = load_config(&common)?;
            let (result, verdict) = run_shaping(&cfg)?;
            let runs = load_runs(&result.out_dir)?;
            print!("{}", summary_table(&runs, cfg.experiment.window));
            println!(
                "negreward below both safe agents on {}/{} seeds; aggregate verdict {}",
                verdict.wins(),
                verdict.per_seed.len(),
                verdict.aggregate
            );
            Ok(())
        }
        Command::LearnRules { common, save, pairs } => {
            let cfg = load_config(&common)?;
            cfg.validate()?;
            let (shield, report) = learned_shield(&cfg)?;
            if let Some(r) = report {
                println!(
                    "examples {}  unsafe rate {:.4}  loss {:.5} -> {:.5}  accuracy {:.4}{}",
                    r.examples,
                    r.unsafe_rate,
                    r.initial_loss,
                    r.final_loss,
                    r.accuracy,
                    if r.degenerate { "  (single-class data)" } else { "" }
                );
            }
            if let Some(path) = save {
                let mut f = fs::File::create(&path).with_context(|| path.display().to_string())?;
                shield.model().save(&mut f)?;
                println!("saved {}", path.display());
            }
            let rules = RuleShield::new(load_rules(&cfg)?, cfg.qsr_params());
            let mut env = make_env(&cfg.experiment.env, cfg.env_config()?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rule_learner.seed.wrapping_add(1));
            let rate = agreement(&shield, &rules, env.as_mut(), pairs, &mut rng);
            println!("agreement with hand-written rules: {rate:.4} over {pairs} pairs");
            Ok(())
        }
        Command::Report { dir, window, plot } => {
            anyhow::ensure!(window >= 1, "window must be at least 1");
            let runs = load_runs(&dir)?;
            anyhow::ensure!(!runs.is_empty(), "no run CSVs in {}", dir.display());
            print!("{}", summary_table(&runs, window));
            if let Some(p) = plot {
                fs::write(&p, learning_curve_svg(&runs, window)).with_context(|| p.display().to_string())?;
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Config { common } => {
            let cfg = load_config(&common)?;
            print!("{}", cfg.to_toml());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
