//! Safety-rule language and rule evaluation.
//!
//! A rule is a conjunction of relational atoms and one forbidden action:
//!
//! ```text
//! # a car right above the agent makes moving up unsafe
//! rule r1: close(agent, ?o) & n(agent, ?o) & type(?o, car) => forbid(up)
//! ```
//!
//! Terms starting with `?` are variables; everything else is a constant.
//! A rule fires in a symbolic state when some assignment of its variables
//! turns every atom into a relation of that state. An action is safe when no
//! firing rule forbids it.

mod engine;
mod parser;

pub use engine::{
    brute_force_matches, find_binding, is_action_safe, matches, safe_actions, select_random_safe_action,
    Binding,
};
pub use parser::{parse_rules, parse_rules_with};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::action::Action;
use crate::qsr::PREDICATES;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(String),
    /// Variable name without the leading `?`.
    Var(String),
}

impl Term {
    pub fn constant(s: &str) -> Self {
        Term::Const(s.to_string())
    }

    pub fn var(s: &str) -> Self {
        Term::Var(s.trim_start_matches('?').to_string())
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(c) => f.write_str(c),
            Term::Var(v) => write!(f, "?{v}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: &str, args: Vec<Term>) -> Self {
        Self {
            predicate: predicate.to_string(),
            args,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.predicate)?;
        for (i, t) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{t}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SafetyRule {
    pub name: String,
    pub body: Vec<Atom>,
    pub forbidden: Action,
}

impl SafetyRule {
    pub fn variables(&self) -> BTreeSet<&str> {
        self.body
            .iter()
            .flat_map(|a| a.args.iter())
            .filter_map(|t| match t {
                Term::Var(v) => Some(v.as_str()),
                Term::Const(_) => None,
            })
            .collect()
    }
}

impl fmt::Display for SafetyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rule {}: ", self.name)?;
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, " => forbid({})", self.forbidden)
    }
}

/// Predicate arities and action names a rule file may use.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    pub predicates: BTreeMap<String, usize>,
    pub actions: Vec<Action>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::for_actions(&Action::ALL)
    }
}

impl Vocabulary {
    /// Relation vocabulary of the spatial extractor with the given actions.
    pub fn for_actions(actions: &[Action]) -> Self {
        Self {
            predicates: PREDICATES.iter().map(|p| (p.to_string(), 2)).collect(),
            actions: actions.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RuleSet {
    rules: Vec<SafetyRule>,
}

impl RuleSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a rule set, rejecting duplicate rule names.
    pub fn new(rules: Vec<SafetyRule>) -> Result<Self, RuleError> {
        let mut seen = BTreeSet::new();
        for r in &rules {
            if !seen.insert(r.name.as_str()) {
                return Err(RuleError::DuplicateRule(r.name.clone()));
            }
        }
        Ok(Self { rules })
    }

    pub fn rules(&self) -> &[SafetyRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn push(&mut self, rule: SafetyRule) -> Result<(), RuleError> {
        if self.rules.iter().any(|r| r.name == rule.name) {
            return Err(RuleError::DuplicateRule(rule.name));
        }
        self.rules.push(rule);
        Ok(())
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RuleError {
    #[error("{line}:{column}: syntax error: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        column: usize,
        expected: String,
        found: String,
    },
    #[error("{line}:{column}: unknown predicate `{name}`")]
    UnknownPredicate {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("{line}:{column}: unknown action `{name}`")]
    UnknownAction {
        line: usize,
        column: usize,
        name: String,
    },
    #[error("{line}:{column}: predicate `{name}` takes {expected} arguments, got {found}")]
    Arity {
        line: usize,
        column: usize,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate rule name `{0}`")]
    DuplicateRule(String),
}

/// Source of the rule files shipped with the crate.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    match name {
        "crossroad" => Some(include_str!("../../rules/crossroad.rules")),
        "freeway" => Some(include_str!("../../rules/freeway.rules")),
        _ => None,
    }
}

/// Parses a shipped rule file.
pub fn builtin(name: &str) -> Option<RuleSet> {
    builtin_source(name).map(|src| parse_rules(src).expect("shipped rule files parse"))
}
