//! Safe exploration for value-based reinforcement learning.
//!
//! Safety rules are conjunctions of qualitative spatial relations between the
//! agent and nearby objects together with one forbidden action. During
//! training, an action-selection policy consults the rules and replaces
//! actions that would violate them with a uniformly sampled safe action.
//!
//! The crate is organised as a set of registries: environments, value
//! learners, action selectors, and safety checks are each selected by name at
//! runtime and combined by the [`harness`].

pub mod action;
pub mod agents;
pub mod envs;
pub mod harness;
pub mod learner;
pub mod qsr;
pub mod rules;

pub use action::Action;
pub use envs::{EnvConfig, Environment, GridPoint, Observation};
pub use qsr::{QsrParams, SymbolicState};
pub use rules::RuleSet;
