//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//!
//! The DQN criteria train for 25,000 episodes per run and dominate the
//! runtime; set `SAFERL_ACCEPTANCE_SKIP_DQN=1` to skip AC2 and AC6 when
//! iterating locally.

mod common;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use saferl::agents::RuleShield;
use saferl::envs::{make_env, RewardMode};
use saferl::harness::learn::agreement;
use saferl::harness::metrics::{
    episode_of_max, episodes_to_baseline, final_smoothed, max_smoothed, relative_deaths, reward_shaping_compare,
};
use saferl::harness::run::{load_rules, run_csv_path, run_with_shields};
use saferl::harness::{AgentKind, ExperimentConfig, ExperimentResult, Shields};
use saferl::rules::{builtin_source, is_action_safe, parse_rules};

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];
const WINDOW: usize = 100;

struct Outcome {
    id: &'static str,
    pass: bool,
    detail: String,
}

fn report(out: &mut Vec<Outcome>, id: &'static str, pass: bool, detail: String) {
    println!("{id} {} {detail}", if pass { "PASS" } else { "FAIL" });
    out.push(Outcome { id, pass, detail });
}

fn config(dir: &Path, episodes: usize) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.experiment.env = "crossroad".into();
    c.experiment.episodes = episodes;
    c.experiment.seeds = SEEDS.to_vec();
    c.experiment.window = WINDOW;
    c.experiment.out_dir = dir.to_path_buf();
    c
}

fn run(cfg: &ExperimentConfig, agents: &[&str]) -> (ExperimentResult, Duration) {
    let kinds: Vec<AgentKind> = agents.iter().map(|a| AgentKind::parse(a).unwrap()).collect();
    let started = Instant::now();
    let shields = Shields::for_agents(cfg, &kinds).expect("safety checks build");
    let res = run_with_shields(cfg, &kinds, &shields).expect("runs complete");
    (res, started.elapsed())
}

fn rewards(res: &ExperimentResult, agent: &str, seed: u64) -> Vec<f64> {
    res.run(agent, seed).expect("run exists").rewards()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(",")
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut out = Vec::new();

    // Tabular Crossroad, 5,000 episodes x 5 seeds.
    let tab_dir = tmp.path().join("tabular");
    let tab = config(&tab_dir, 5_000);
    let (fg, fg_time) = run(&tab, &["q+fg"]);
    let violations: usize = fg.runs.iter().map(|r| r.violations).sum();
    let steps: usize = fg.runs.iter().flat_map(|r| &r.episodes).map(|m| m.steps).sum();
    report(
        &mut out,
        "AC1",
        violations == 0 && fg_time < Duration::from_secs(60),
        format!(
            "q+fg unsafe-with-alternative actions: {violations} over {steps} steps; runtime {:.1}s (< 60s)",
            fg_time.as_secs_f64()
        ),
    );

    let (base, base_time) = run(&tab, &["q", "q+ge"]);
    let tab_time = fg_time + base_time;
    let get = |agent: &str, seed: u64| -> Vec<f64> {
        if agent == "q+fg" {
            rewards(&fg, agent, seed)
        } else {
            rewards(&base, agent, seed)
        }
    };

    let mut ratios = Vec::new();
    for &s in &SEEDS {
        let q = &base.run("q", s).unwrap().episodes;
        let ge = &base.run("q+ge", s).unwrap().episodes;
        let f = &fg.run("q+fg", s).unwrap().episodes;
        ratios.push(relative_deaths(q, &[ge, f]).expect("vanilla dies at least once"));
    }
    let ge_r: Vec<f64> = ratios.iter().map(|r| r[0]).collect();
    let fg_r: Vec<f64> = ratios.iter().map(|r| r[1]).collect();
    report(
        &mut out,
        "AC3",
        ratios.iter().flatten().all(|&r| r < 0.5) && tab_time < Duration::from_secs(120),
        format!(
            "relative deaths q+ge [{}] q+fg [{}] (< 0.5 each); runtime {:.1}s (< 120s)",
            fmt(&ge_r),
            fmt(&fg_r),
            tab_time.as_secs_f64()
        ),
    );

    let mut hits = 0;
    let mut detail = Vec::new();
    for &s in &SEEDS {
        let q = get("q", s);
        let f = get("q+fg", s);
        let peak = episode_of_max(&q, WINDOW).unwrap();
        let reach = episodes_to_baseline(&q, &f, WINDOW);
        let ok = reach.is_some_and(|e| e as f64 <= 0.5 * peak as f64);
        hits += usize::from(ok);
        detail.push(format!(
            "s{s}:{}/{peak}",
            reach.map_or("never".to_string(), |e| e.to_string())
        ));
    }
    report(
        &mut out,
        "AC4",
        hits >= 4,
        format!("q+fg episodes to vanilla max / vanilla peak episode {} ; {hits}/5 within half (>= 4)", detail.join(" ")),
    );

    let starts: Vec<(f64, f64)> = SEEDS
        .iter()
        .map(|&s| (mean(&get("q+fg", s)[..100]), mean(&get("q", s)[..100])))
        .collect();
    report(
        &mut out,
        "AC5",
        starts.iter().all(|(f, q)| f > q),
        format!(
            "first-100 mean reward q+fg [{}] vs q [{}]",
            fmt(&starts.iter().map(|p| p.0).collect::<Vec<_>>()),
            fmt(&starts.iter().map(|p| p.1).collect::<Vec<_>>())
        ),
    );

    // Learned-rule parity.
    let mut lr_cfg = tab.clone();
    lr_cfg.experiment.out_dir = tmp.path().join("learned");
    let kinds = [AgentKind::parse("q+learnedrule").unwrap()];
    let shields = Shields::for_agents(&lr_cfg, &kinds).expect("classifier trains");
    let learned = run_with_shields(&lr_cfg, &kinds, &shields).expect("runs complete");
    let lr_final: Vec<f64> = SEEDS.iter().map(|&s| final_smoothed(&rewards(&learned, "q+learnedrule", s), WINDOW)).collect();
    let ge_final: Vec<f64> = SEEDS.iter().map(|&s| final_smoothed(&get("q+ge", s), WINDOW)).collect();
    let (lm, gm) = (mean(&lr_final), mean(&ge_final));
    let parity = (lm - gm).abs() <= 0.1 * gm.abs();
    let learned_check = shields.learned.as_ref().expect("learned check");
    let rules = RuleShield::new(load_rules(&lr_cfg).unwrap(), lr_cfg.qsr_params());
    let mut env = make_env("crossroad", lr_cfg.env_config().unwrap()).unwrap();
    let agree = agreement(learned_check.as_ref(), &rules, env.as_mut(), 10_000, &mut ChaCha8Rng::seed_from_u64(77));
    let acc = shields.learn_report.as_ref().map_or(f64::NAN, |r| r.accuracy);
    report(
        &mut out,
        "AC7",
        parity && agree >= 0.95,
        format!(
            "final smoothed q+learnedrule {lm:.3} vs q+ge {gm:.3} (within 10%: {parity}); agreement {agree:.4} over 10000 pairs (>= 0.95); classifier accuracy {acc:.4}"
        ),
    );

    let mlp = common::mlp_gradient_error(3);
    let lr = common::logistic_gradient_error(4);
    let chain = common::chain_error();
    report(
        &mut out,
        "AC8",
        mlp <= 1e-4 && lr <= 1e-6 && chain <= 1e-6,
        format!("MLP rel err {mlp:.2e} (<= 1e-4); logistic rel err {lr:.2e} (<= 1e-6); chain |Q - Q*| {chain:.2e} (<= 1e-6)"),
    );

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0;
    for _ in 0..10_000 {
        let state = common::random_state(&mut rng);
        let rules = common::random_rules(&mut rng);
        let a = *common::A5.choose(&mut rng).unwrap();
        mismatches += usize::from(is_action_safe(&state, a, &rules) != common::oracle_safe(&state, a, &rules));
    }
    let round_trip = ["crossroad", "freeway"].iter().all(|n| {
        let rs = parse_rules(builtin_source(n).unwrap()).unwrap();
        parse_rules(&rs.to_string()).unwrap() == rs
    });
    report(
        &mut out,
        "AC9",
        mismatches == 0 && round_trip,
        format!("engine vs enumeration mismatches {mismatches}/10000; shipped files round-trip {round_trip}"),
    );

    let mut again = tab.clone();
    again.experiment.out_dir = tmp.path().join("again");
    again.experiment.seeds = vec![1, 2];
    run(&again, &["q", "q+ge", "q+fg"]);
    let identical = ["q", "q+ge", "q+fg"].iter().all(|a| {
        [1, 2].iter().all(|&s| {
            fs::read(run_csv_path(&tab_dir, a, s)).unwrap() == fs::read(run_csv_path(&again.experiment.out_dir, a, s)).unwrap()
        })
    });
    report(
        &mut out,
        "AC10",
        identical,
        format!("repeated tabular runs byte-identical: {identical}"),
    );

    if std::env::var_os("SAFERL_ACCEPTANCE_SKIP_DQN").is_some() {
        println!("AC2 SKIP (SAFERL_ACCEPTANCE_SKIP_DQN set)");
        println!("AC6 SKIP (SAFERL_ACCEPTANCE_SKIP_DQN set)");
    } else {
        dqn_criteria(tmp.path(), &mut out);
    }

    out.sort_by_key(|o| o.id[2..].parse::<u32>().unwrap());
    let passed = out.iter().filter(|o| o.pass).count();
    println!("\nacceptance summary: {passed}/{} passed", out.len());
    for o in out.iter().filter(|o| !o.pass) {
        println!("  failed {}: {}", o.id, o.detail);
    }
}

fn dqn_criteria(tmp: &Path, out: &mut Vec<Outcome>) {
    let cfg = config(&tmp.join("dqn"), 25_000);
    let (res, time) = run(&cfg, &["dqn", "dqn+ge", "dqn+fg"]);
    let maxes = |agent: &str| -> Vec<f64> {
        SEEDS.iter().map(|&s| max_smoothed(&rewards(&res, agent, s), WINDOW)).collect()
    };
    let finals = |agent: &str| -> f64 {
        mean(&SEEDS.iter().map(|&s| final_smoothed(&rewards(&res, agent, s), WINDOW)).collect::<Vec<_>>())
    };
    let (ge, fg) = (maxes("dqn+ge"), maxes("dqn+fg"));
    let at_one = |v: &[f64]| v.iter().filter(|&&m| m >= 1.0 - 1e-9).count();
    let (vf, gf, ff) = (finals("dqn"), finals("dqn+ge"), finals("dqn+fg"));
    report(
        out,
        "AC2",
        at_one(&ge) >= 4 && at_one(&fg) >= 4 && vf < gf && vf < ff && time < Duration::from_secs(1800),
        format!(
            "max smoothed dqn+ge [{}] dqn+fg [{}] (1.0 on >= 4/5); mean final dqn {vf:.3} vs dqn+ge {gf:.3}, dqn+fg {ff:.3}; runtime {:.0}s (< 1800s)",
            fmt(&ge),
            fmt(&fg),
            time.as_secs_f64()
        ),
    );

    let mut shaping = config(&tmp.join("shaping"), 25_000);
    shaping.env.reward_mode = Some(RewardMode::ZeroOne);
    let (res, time) = run(&shaping, &["dqn+ge", "dqn+fg", "dqn+negreward"]);
    let series = |agent: &str| -> Vec<Vec<f64>> { SEEDS.iter().map(|&s| rewards(&res, agent, s)).collect() };
    let v = reward_shaping_compare(&series("dqn+negreward"), &[series("dqn+ge"), series("dqn+fg")], WINDOW);
    report(
        out,
        "AC6",
        v.wins() >= 4,
        format!(
            "final smoothed negreward [{}] vs min(dqn+ge, dqn+fg) [{}]; below on {}/5 (>= 4); runtime {:.0}s",
            fmt(&v.shaped),
            fmt(&v.safe_min),
            v.wins(),
            time.as_secs_f64()
        ),
    );
}
