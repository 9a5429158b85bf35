//! Reference implementations shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use saferl::agents::dqn::{td_loss_and_grad, VecExperience};
use saferl::agents::mlp::Mlp;
use saferl::agents::{Experience, LearningRate, QTable, StateKey};
use saferl::learner::{LabeledExample, LogisticModel};
use saferl::qsr::{Relation, SymbolicState};
use saferl::rules::{Atom, RuleSet, SafetyRule, Term};
use saferl::Action;

pub const A5: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Stay];
const PREDS: [&str; 5] = ["close", "n", "s", "type", "heading"];

// Independent reference: ground every atom under every total assignment of
// variables to constants seen in the state.
pub fn oracle_fires(rule: &SafetyRule, state: &SymbolicState) -> bool {
    let mut vars: Vec<&str> = Vec::new();
    for a in &rule.body {
        for t in &a.args {
            if let Term::Var(v) = t {
                if !vars.contains(&v.as_str()) {
                    vars.push(v);
                }
            }
        }
    }
    let mut consts: Vec<String> = Vec::new();
    for r in state.iter() {
        for c in [&r.subject, &r.object] {
            if !consts.contains(c) {
                consts.push(c.clone());
            }
        }
    }
    let mut assignment: BTreeMap<&str, &str> = BTreeMap::new();
    fn go<'a>(
        i: usize,
        vars: &[&'a str],
        consts: &'a [String],
        assignment: &mut BTreeMap<&'a str, &'a str>,
        rule: &SafetyRule,
        state: &SymbolicState,
    ) -> bool {
        if i == vars.len() {
            return rule.body.iter().all(|atom| {
                let g: Vec<&str> = atom
                    .args
                    .iter()
                    .map(|t| match t {
                        Term::Const(c) => c.as_str(),
                        Term::Var(v) => assignment[v.as_str()],
                    })
                    .collect();
                state.contains(&Relation::new(&atom.predicate, g[0], g[1]))
            });
        }
        consts.iter().any(|c| {
            assignment.insert(vars[i], c);
            go(i + 1, vars, consts, assignment, rule, state)
        })
    }
    go(0, &vars, &consts, &mut assignment, rule, state)
}

pub fn oracle_safe(state: &SymbolicState, action: Action, rules: &RuleSet) -> bool {
    rules
        .rules()
        .iter()
        .all(|r| r.forbidden != action || !oracle_fires(r, state))
}

pub fn random_state(rng: &mut ChaCha8Rng) -> SymbolicState {
    let n_obj = rng.gen_range(0..=4);
    let objs: Vec<String> = (1..=n_obj).map(|i| format!("car{i}")).collect();
    let mut state = SymbolicState::new();
    for o in &objs {
        for p in ["close", "n", "s"] {
            if rng.gen_bool(0.4) {
                state.insert(Relation::new(p, "agent", o));
            }
        }
        if rng.gen_bool(0.7) {
            state.insert(Relation::new("type", o, "car"));
        }
        if rng.gen_bool(0.5) {
            let h = ["e", "w"].choose(rng).unwrap();
            state.insert(Relation::new("heading", o, h));
        }
    }
    state
}

fn random_term(rng: &mut ChaCha8Rng, pool: &[&str]) -> Term {
    if rng.gen_bool(0.5) {
        Term::var(["?a", "?b"].choose(rng).unwrap())
    } else {
        Term::constant(pool.choose(rng).unwrap())
    }
}

pub fn random_rules(rng: &mut ChaCha8Rng) -> RuleSet {
    let n = rng.gen_range(0..=4);
    let rules = (0..n)
        .map(|i| {
            let body = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let p = *PREDS.choose(rng).unwrap();
                    let args = match p {
                        "type" => vec![random_term(rng, &["car1", "car2"]), random_term(rng, &["car", "agent"])],
                        "heading" => vec![random_term(rng, &["car1", "car3"]), random_term(rng, &["e", "w"])],
                        _ => vec![random_term(rng, &["agent", "car1"]), random_term(rng, &["car1", "car2", "agent"])],
                    };
                    Atom::new(p, args)
                })
                .collect();
            SafetyRule {
                name: format!("r{i}"),
                body,
                forbidden: *A5.choose(rng).unwrap(),
            }
        })
        .collect();
    RuleSet::new(rules).unwrap()
}


fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Largest relative error between backprop and central differences of the
/// TD loss over a few random networks and batches.
pub fn mlp_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let online = Mlp::new(&[4, 6, 3], false, &mut rng);
        let target = Mlp::new(&[4, 6, 3], false, &mut rng);
        let batch: Vec<VecExperience> = (0..8)
            .map(|_| Experience {
                state: (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                action: rng.gen_range(0..3),
                reward: rng.gen_range(-1.0..1.0),
                next_state: (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                terminal: rng.gen_bool(0.3),
            })
            .collect();
        let refs: Vec<&VecExperience> = batch.iter().collect();
        let (_, grads) = td_loss_and_grad(&online, &target, &refs, 0.9);
        let analytic: Vec<f64> = grads.params().copied().collect();
        let h = 1e-6;
        for i in 0..online.param_count() {
            let eval = |d: f64| {
                let mut m = online.clone();
                *m.params_mut().nth(i).unwrap() += d;
                td_loss_and_grad(&m, &target, &refs, 0.9).0
            };
            worst = worst.max(rel_err(analytic[i], (eval(h) - eval(-h)) / (2.0 * h)));
        }
    }
    worst
}

/// Same check for the logistic cross-entropy.
pub fn logistic_gradient_error(seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<LabeledExample> = (0..60)
        .map(|_| LabeledExample::new((0..6).filter(|_| rng.gen_bool(0.3)).collect(), rng.gen_bool(0.4)))
        .collect();
    let mut m = LogisticModel::zeros(6);
    m.weights.iter_mut().for_each(|w| *w = rng.gen_range(-1.5..1.5));
    m.bias = rng.gen_range(-1.0..1.0);
    let (gw, gb) = m.gradient(&data);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..=6 {
        let (mut p, mut q) = (m.clone(), m.clone());
        if i < 6 {
            p.weights[i] += h;
            q.weights[i] -= h;
        } else {
            p.bias += h;
            q.bias -= h;
        }
        let num = (p.loss(&data) - q.loss(&data)) / (2.0 * h);
        worst = worst.max(rel_err(if i < 6 { gw[i] } else { gb }, num));
    }
    worst
}

/// Two-state chain. State 0: action 0 stays, action 1 moves to state 1.
/// State 1: action 1 ends the episode with reward 1, action 0 returns to 0.
/// With gamma 0.9, Q* = [[0.81, 0.9], [0.81, 1.0]]. Returns the largest
/// deviation of learned values from Q*.
pub fn chain_error() -> f64 {
    let s = |i: i16| StateKey(vec![i]);
    let transitions = [
        (1, 1, 1.0, 1, true),
        (0, 1, 0.0, 1, false),
        (0, 0, 0.0, 0, false),
        (1, 0, 0.0, 0, false),
    ];
    let mut q = QTable::new(2, LearningRate::InverseVisit, 0.9);
    for _ in 0..2500 {
        for &(st, a, r, next, terminal) in &transitions {
            q.update(&Experience {
                state: s(st),
                action: a,
                reward: r,
                next_state: s(next),
                terminal,
            });
        }
    }
    let q_star = [[0.81, 0.9], [0.81, 1.0]];
    let mut worst: f64 = 0.0;
    for st in 0..2 {
        for a in 0..2 {
            worst = worst.max((q.get(&s(st as i16), a) - q_star[st][a]).abs());
        }
    }
    worst
}
