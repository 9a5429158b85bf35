use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Atom, RuleSet, SafetyRule, Term};
use crate::action::Action;
use crate::qsr::{Relation, SymbolicState};

/// Variable name to constant.
pub type Binding = BTreeMap<String, String>;

fn unify<'a>(term: &'a Term, value: &'a str, binding: &mut Vec<(&'a str, &'a str)>) -> bool {
    match term {
        Term::Const(c) => c == value,
        Term::Var(v) => match binding.iter().find(|(name, _)| *name == v.as_str()) {
            Some((_, bound)) => *bound == value,
            None => {
                binding.push((v.as_str(), value));
                true
            }
        },
    }
}

fn solve<'a>(
    atoms: &'a [Atom],
    state: &'a SymbolicState,
    binding: &mut Vec<(&'a str, &'a str)>,
) -> bool {
    let Some((atom, rest)) = atoms.split_first() else {
        return true;
    };
    if atom.args.len() != 2 {
        return false;
    }
    for rel in state.with_predicate(&atom.predicate) {
        let mark = binding.len();
        let ok = unify(&atom.args[0], &rel.subject, binding)
            && unify(&atom.args[1], &rel.object, binding);
        if ok && solve(rest, state, binding) {
            return true;
        }
        binding.truncate(mark);
    }
    false
}

/// A satisfying variable assignment for the rule body, if any.
pub fn find_binding(rule: &SafetyRule, state: &SymbolicState) -> Option<Binding> {
    let mut binding = Vec::new();
    solve(&rule.body, state, &mut binding).then(|| {
        binding
            .into_iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    })
}

/// True iff some assignment of the rule's variables makes every body atom a
/// relation of `state`.
pub fn matches(rule: &SafetyRule, state: &SymbolicState) -> bool {
    let mut binding = Vec::new();
    solve(&rule.body, state, &mut binding)
}

/// Reference matcher: tries every assignment of variables to constants
/// appearing in `state`. Exponential; meant for cross-checking.
pub fn brute_force_matches(rule: &SafetyRule, state: &SymbolicState) -> bool {
    let vars: Vec<&str> = rule.variables().into_iter().collect();
    let domain: Vec<&str> = state.constants().into_iter().collect();
    if !vars.is_empty() && domain.is_empty() {
        return false;
    }
    let total = domain.len().pow(vars.len() as u32);
    (0..total).any(|mut code| {
        let mut assignment = BTreeMap::new();
        for v in &vars {
            assignment.insert(*v, domain[code % domain.len()]);
            code /= domain.len();
        }
        rule.body.iter().all(|atom| {
            let ground: Vec<&str> = atom
                .args
                .iter()
                .map(|t| match t {
                    Term::Const(c) => c.as_str(),
                    Term::Var(v) => assignment[v.as_str()],
                })
                .collect();
            ground.len() == 2 && state.contains(&Relation::new(&atom.predicate, ground[0], ground[1]))
        })
    })
}

impl RuleSet {
    /// Actions forbidden by at least one firing rule.
    pub fn forbidden_actions(&self, state: &SymbolicState) -> Vec<Action> {
        let mut out: Vec<Action> = Vec::new();
        for rule in self.rules() {
            if !out.contains(&rule.forbidden) && matches(rule, state) {
                out.push(rule.forbidden);
            }
        }
        out
    }
}

/// No rule both fires in `state` and forbids `action`.
pub fn is_action_safe(state: &SymbolicState, action: Action, rules: &RuleSet) -> bool {
    !rules
        .rules()
        .iter()
        .any(|r| r.forbidden == action && matches(r, state))
}

/// The subset of `actions` that is safe in `state`, in input order.
pub fn safe_actions(state: &SymbolicState, actions: &[Action], rules: &RuleSet) -> Vec<Action> {
    let forbidden = rules.forbidden_actions(state);
    actions
        .iter()
        .copied()
        .filter(|a| !forbidden.contains(a))
        .collect()
}

/// Uniform draw from the safe actions, or from all actions when none is safe.
///
/// # Panics
/// If `actions` is empty.
pub fn select_random_safe_action<R: Rng + ?Sized>(
    state: &SymbolicState,
    actions: &[Action],
    rules: &RuleSet,
    rng: &mut R,
) -> Action {
    let safe = safe_actions(state, actions, rules);
    let pool = if safe.is_empty() { actions } else { &safe };
    *pool.choose(rng).expect("action set is nonempty")
}
