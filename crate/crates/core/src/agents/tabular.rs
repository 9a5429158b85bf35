//! Tabular Q-learning.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rand::RngCore;

use super::{CheckpointError, Experience, Transition, ValueLearner};
use crate::envs::{ObjectKind, Observation};

/// Serialisation of the Markov state behind an observation: every object's
/// cell and every car's velocity, in object order. The agent's velocity only
/// records its previous move and is left out.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(pub Vec<i16>);

impl StateKey {
    pub fn from_observation(obs: &Observation) -> Self {
        let mut key = Vec::with_capacity(obs.objects.len() * 4);
        for o in &obs.objects {
            key.extend_from_slice(&[o.pos.x as i16, o.pos.y as i16]);
            if o.kind != ObjectKind::Agent {
                key.extend_from_slice(&[o.velocity.0 as i16, o.velocity.1 as i16]);
            }
        }
        StateKey(key)
    }

    fn encode(&self) -> String {
        self.0
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    fn decode(s: &str) -> Option<Self> {
        if s.is_empty() {
            return Some(StateKey(Vec::new()));
        }
        s.split(',')
            .map(|v| v.parse().ok())
            .collect::<Option<Vec<i16>>>()
            .map(StateKey)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LearningRate {
    Constant(f64),
    /// `1 / n(s, a)` where `n` counts updates of that entry.
    InverseVisit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    values: HashMap<StateKey, Vec<f64>>,
    visits: HashMap<StateKey, Vec<u64>>,
    n_actions: usize,
    rate: LearningRate,
    gamma: f64,
}

impl QTable {
    pub fn new(n_actions: usize, rate: LearningRate, gamma: f64) -> Self {
        assert!((0.0..1.0).contains(&gamma), "discount must lie in [0, 1)");
        if let LearningRate::Constant(a) = rate {
            assert!((0.0..=1.0).contains(&a), "learning rate must lie in [0, 1]");
        }
        Self {
            values: HashMap::new(),
            visits: HashMap::new(),
            n_actions,
            rate,
            gamma,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Number of states with at least one stored entry.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Missing entries read as zero.
    pub fn get(&self, state: &StateKey, action: usize) -> f64 {
        self.values.get(state).map_or(0.0, |v| v[action])
    }

    pub fn row(&self, state: &StateKey) -> Vec<f64> {
        self.values
            .get(state)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.n_actions])
    }

    pub fn set(&mut self, state: StateKey, action: usize, value: f64) {
        let n = self.n_actions;
        self.values.entry(state).or_insert_with(|| vec![0.0; n])[action] = value;
    }

    fn max_next(&self, state: &StateKey) -> f64 {
        self.values
            .get(state)
            .map_or(0.0, |v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    }

    /// One-step update
    /// `Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') * (1 - terminal) - Q(s,a))`.
    /// Returns the new value of `Q(s,a)`.
    pub fn update(&mut self, e: &Experience<StateKey>) -> f64 {
        let n = self.n_actions;
        let visits = self.visits.entry(e.state.clone()).or_insert_with(|| vec![0; n]);
        visits[e.action] += 1;
        let alpha = match self.rate {
            LearningRate::Constant(a) => a,
            LearningRate::InverseVisit => 1.0 / visits[e.action] as f64,
        };
        let bootstrap = if e.terminal {
            0.0
        } else {
            self.max_next(&e.next_state)
        };
        let target = e.reward + self.gamma * bootstrap;
        let entry = &mut self.values.entry(e.state.clone()).or_insert_with(|| vec![0.0; n])[e.action];
        *entry += alpha * (target - *entry);
        *entry
    }

    /// Text checkpoint; entries sorted by state key.
    pub fn save(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "saferl-qtable v1")?;
        writeln!(w, "actions {}", self.n_actions)?;
        writeln!(w, "gamma {}", self.gamma)?;
        match self.rate {
            LearningRate::Constant(a) => writeln!(w, "alpha {a}")?,
            LearningRate::InverseVisit => writeln!(w, "alpha inverse-visit")?,
        }
        let mut keys: Vec<&StateKey> = self.values.keys().collect();
        keys.sort();
        writeln!(w, "entries {}", keys.len())?;
        for k in keys {
            let vals: Vec<String> = self.values[k].iter().map(|v| v.to_string()).collect();
            let visits: Vec<String> = self
                .visits
                .get(k)
                .map(|v| v.iter().map(|c| c.to_string()).collect())
                .unwrap_or_else(|| vec!["0".into(); self.n_actions]);
            writeln!(w, "{}\t{}\t{}", k.encode(), vals.join(" "), visits.join(" "))?;
        }
        Ok(())
    }

    pub fn load(r: &mut dyn BufRead) -> Result<Self, CheckpointError> {
        let mut lines = r.lines();
        let mut next = |what: &str| -> Result<String, CheckpointError> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| CheckpointError::Format(format!("missing {what}")))
        };
        let header = next("header")?;
        if header.trim() != "saferl-qtable v1" {
            return Err(CheckpointError::Version(header));
        }
        let field = |line: String, name: &str| -> Result<String, CheckpointError> {
            line.strip_prefix(name)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| CheckpointError::Format(format!("expected `{name}`, got `{line}`")))
        };
        let bad = |m: &str| CheckpointError::Format(m.to_string());
        let n_actions: usize = field(next("actions")?, "actions")?
            .parse()
            .map_err(|_| bad("actions"))?;
        let gamma: f64 = field(next("gamma")?, "gamma")?
            .parse()
            .map_err(|_| bad("gamma"))?;
        let alpha = field(next("alpha")?, "alpha")?;
        let rate = if alpha == "inverse-visit" {
            LearningRate::InverseVisit
        } else {
            LearningRate::Constant(alpha.parse().map_err(|_| bad("alpha"))?)
        };
        let entries: usize = field(next("entries")?, "entries")?
            .parse()
            .map_err(|_| bad("entries"))?;
        let mut table = QTable::new(n_actions, rate, gamma);
        for _ in 0..entries {
            let line = next("entry")?;
            let mut parts = line.split('\t');
            let (Some(k), Some(v), Some(c)) = (parts.next(), parts.next(), parts.next()) else {
                return Err(bad("entry needs key, values and visits"));
            };
            let key = StateKey::decode(k).ok_or_else(|| bad("state key"))?;
            let vals = v
                .split_whitespace()
                .map(|x| x.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad("values"))?;
            let visits = c
                .split_whitespace()
                .map(|x| x.parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad("visits"))?;
            if vals.len() != n_actions || visits.len() != n_actions {
                return Err(bad("entry width does not match action count"));
            }
            if visits.iter().any(|&c| c > 0) {
                table.visits.insert(key.clone(), visits);
            }
            table.values.insert(key, vals);
        }
        Ok(table)
    }
}

/// Q-learning over fully serialised observations.
#[derive(Clone, Debug)]
pub struct TabularAgent {
    pub table: QTable,
}

impl TabularAgent {
    pub fn new(table: QTable) -> Self {
        Self { table }
    }
}

impl ValueLearner for TabularAgent {
    fn kind(&self) -> &'static str {
        "q"
    }

    fn q_values(&mut self, obs: &Observation) -> Vec<f64> {
        self.table.row(&StateKey::from_observation(obs))
    }

    fn observe(&mut self, t: &Transition<'_>, _rng: &mut dyn RngCore) -> Option<f64> {
        let e = Experience {
            state: StateKey::from_observation(t.obs),
            action: t.action,
            reward: t.reward,
            next_state: StateKey::from_observation(t.next_obs),
            terminal: t.terminal,
        };
        let before = self.table.get(&e.state, e.action);
        let after = self.table.update(&e);
        Some((after - before).abs())
    }

    fn save(&self, w: &mut dyn Write) -> io::Result<()> {
        self.table.save(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp(r: f64, terminal: bool) -> Experience<StateKey> {
        Experience {
            state: StateKey(vec![0]),
            action: 1,
            reward: r,
            next_state: StateKey(vec![1]),
            terminal,
        }
    }

    #[test]
    fn terminal_reward_half_step() {
        let mut q = QTable::new(2, LearningRate::Constant(0.5), 0.9);
        assert_eq!(q.update(&exp(1.0, true)), 0.5);
    }

    #[test]
    fn zero_rate_leaves_table_unchanged() {
        let mut q = QTable::new(2, LearningRate::Constant(0.0), 0.9);
        q.set(StateKey(vec![0]), 1, 0.7);
        q.update(&exp(1.0, false));
        assert_eq!(q.get(&StateKey(vec![0]), 1), 0.7);
    }

    #[test]
    fn zero_reward_terminal_decays() {
        let mut q = QTable::new(2, LearningRate::Constant(0.25), 0.9);
        q.set(StateKey(vec![0]), 1, 2.0);
        assert_eq!(q.update(&exp(0.0, true)), 0.75 * 2.0);
    }

    #[test]
    fn update_touches_one_entry() {
        let mut q = QTable::new(2, LearningRate::Constant(0.5), 0.9);
        q.set(StateKey(vec![1]), 0, 1.0);
        q.set(StateKey(vec![0]), 0, 3.0);
        let v = q.update(&exp(0.0, false));
        assert!((v - 0.45).abs() < 1e-12);
        assert_eq!(q.get(&StateKey(vec![0]), 0), 3.0);
        assert_eq!(q.get(&StateKey(vec![1]), 0), 1.0);
        assert_eq!(q.get(&StateKey(vec![1]), 1), 0.0);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut q = QTable::new(3, LearningRate::InverseVisit, 0.95);
        q.update(&Experience {
            state: StateKey(vec![4, 8, -1]),
            action: 2,
            reward: 0.3,
            next_state: StateKey(vec![4, 7, 1]),
            terminal: false,
        });
        q.set(StateKey(vec![4, 7, 1]), 0, 1.0 / 3.0);
        let mut buf = Vec::new();
        q.save(&mut buf).unwrap();
        let back = QTable::load(&mut buf.as_slice()).unwrap();
        assert_eq!(back, q);
        assert!(matches!(
            QTable::load(&mut "saferl-qtable v9\n".as_bytes()),
            Err(CheckpointError::Version(_))
        ));
    }
}
