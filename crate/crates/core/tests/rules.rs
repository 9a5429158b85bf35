mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{oracle_safe, random_rules, random_state, A5};
use saferl::qsr::{Relation, SymbolicState};
use saferl::rules::{
    builtin, builtin_source, is_action_safe, parse_rules, safe_actions, select_random_safe_action, RuleSet,
};
use saferl::Action;

fn fig1_state() -> SymbolicState {
    [
        Relation::new("close", "agent", "car1"),
        Relation::new("n", "agent", "car1"),
        Relation::new("type", "car1", "car"),
    ]
    .into_iter()
    .collect()
}

#[test]
fn engine_agrees_with_enumeration_on_random_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut unsafe_seen = 0;
    for _ in 0..10_000 {
        let state = random_state(&mut rng);
        let rules = random_rules(&mut rng);
        let action = *A5.choose(&mut rng).unwrap();
        let got = is_action_safe(&state, action, &rules);
        assert_eq!(got, oracle_safe(&state, action, &rules), "{rules}\n{state:?} {action:?}");
        unsafe_seen += usize::from(!got);
    }
    // The generator must exercise both outcomes.
    assert!(unsafe_seen > 200, "{unsafe_seen}");
}

#[test]
fn freeway_rules_on_the_figure_state() {
    let rules = builtin("freeway").unwrap();
    let s = fig1_state();
    assert!(!is_action_safe(&s, Action::Up, &rules));
    assert!(is_action_safe(&s, Action::Down, &rules));
    assert!(oracle_safe(&s, Action::Down, &rules));
    assert_eq!(
        safe_actions(&s, &[Action::Up, Action::Down, Action::Noop], &rules),
        vec![Action::Down, Action::Noop]
    );
}

#[test]
fn empty_rules_allow_everything() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let s = random_state(&mut rng);
        assert_eq!(safe_actions(&s, &A5, &RuleSet::empty()), A5.to_vec());
    }
}

#[test]
fn one_rule_per_action_blocks_all() {
    let src: String = A5
        .iter()
        .map(|a| format!("rule no_{a}: n(agent, ?o) => forbid({a})\n"))
        .collect();
    let rules = parse_rules(&src).unwrap();
    assert!(safe_actions(&fig1_state(), &A5, &rules).is_empty());
    assert!(A5.iter().all(|&a| !oracle_safe(&fig1_state(), a, &rules)));
}

#[test]
fn sampling_never_leaves_the_safe_set() {
    // Every nonempty forbidden subset of five actions, via one rule per action.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for mask in 0u32..32 {
        let src: String = A5
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, a)| format!("rule no_{a}: close(agent, ?o) => forbid({a})\n"))
            .collect();
        let rules = parse_rules(&src).unwrap();
        let safe = safe_actions(&fig1_state(), &A5, &rules);
        for _ in 0..200 {
            let a = select_random_safe_action(&fig1_state(), &A5, &rules, &mut rng);
            if safe.is_empty() {
                assert!(A5.contains(&a));
            } else {
                assert!(safe.contains(&a), "mask {mask:05b} gave {a:?}");
            }
        }
    }
}

#[test]
fn up_is_never_drawn_when_forbidden() {
    let rules = parse_rules("rule r: n(agent, ?o) => forbid(up)").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let acts = [Action::Up, Action::Down, Action::Stay];
    for _ in 0..10_000 {
        assert_ne!(select_random_safe_action(&fig1_state(), &acts, &rules, &mut rng), Action::Up);
    }
}

#[test]
fn shipped_rule_files_round_trip() {
    for name in ["crossroad", "freeway"] {
        let rs = parse_rules(builtin_source(name).unwrap()).unwrap();
        assert!(!rs.is_empty());
        assert_eq!(parse_rules(&rs.to_string()).unwrap(), rs, "{name}");
    }
}

#[test]
fn crossroad_rules_cover_every_move() {
    let rs = builtin("crossroad").unwrap();
    for a in A5 {
        assert!(rs.rules().iter().any(|r| r.forbidden == a), "{a:?}");
    }
}

proptest! {
    #[test]
    fn random_rule_sets_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rs = random_rules(&mut rng);
        prop_assert_eq!(parse_rules(&rs.to_string()).unwrap(), rs);
    }

    #[test]
    fn adding_a_rule_never_grows_the_safe_set(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_state(&mut rng);
        let base = random_rules(&mut rng);
        let extra = random_rules(&mut rng);
        let before = safe_actions(&state, &A5, &base);
        let mut grown = base.clone();
        for mut r in extra.rules().iter().cloned() {
            r.name = format!("x_{}", r.name);
            grown.push(r).unwrap();
        }
        let after = safe_actions(&state, &A5, &grown);
        prop_assert!(after.iter().all(|a| before.contains(a)));
    }
}
