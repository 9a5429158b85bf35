//! Deep Q-network with experience replay and a periodically synced target
//! network.

use std::io::{self, BufRead, Write};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::features::featurize;
use super::mlp::{Adam, Mlp};
use super::replay::ReplayBuffer;
use super::{AgentError, CheckpointError, Experience, Transition, ValueLearner};
use crate::envs::Observation;

pub type VecExperience = Experience<Vec<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    pub hidden: Vec<usize>,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Online steps between hard target copies.
    pub target_sync: u64,
    pub gamma: f64,
    pub learning_rate: f64,
    /// Environment steps per gradient step.
    pub train_every: u64,
    /// Buffer size before training starts (never below `batch_size`).
    pub learn_start: usize,
    pub zero_output_init: bool,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            batch_size: 32,
            buffer_capacity: 50_000,
            target_sync: 1_000,
            gamma: 0.99,
            learning_rate: 1e-4,
            train_every: 4,
            learn_start: 1_000,
            zero_output_init: false,
        }
    }
}

/// Online and target networks with their optimiser.
#[derive(Clone, Debug)]
pub struct Dqn {
    pub online: Mlp,
    pub target: Mlp,
    adam: Adam,
    pub gamma: f64,
    pub batch_size: usize,
    pub sync_every: u64,
    train_steps: u64,
}

/// Squared TD error of the online network against bootstrapped targets from
/// the target network (no bootstrap for terminal transitions), with its
/// gradient with respect to the online parameters.
pub fn td_loss_and_grad(online: &Mlp, target: &Mlp, batch: &[&VecExperience], gamma: f64) -> (f64, Mlp) {
    let targets = td_targets(target, batch, gamma);
    let inputs: Vec<&[f64]> = batch.iter().map(|e| e.state.as_slice()).collect();
    let actions: Vec<usize> = batch.iter().map(|e| e.action).collect();
    online.selected_mse_grad(&inputs, &actions, &targets)
}

pub fn td_targets(target: &Mlp, batch: &[&VecExperience], gamma: f64) -> Vec<f64> {
    let next: Vec<&[f64]> = batch.iter().map(|e| e.next_state.as_slice()).collect();
    let q_next = target.forward_batch(&next);
    batch
        .iter()
        .zip(q_next)
        .map(|(e, q)| {
            if e.terminal {
                e.reward
            } else {
                e.reward + gamma * q.into_iter().fold(f64::NEG_INFINITY, f64::max)
            }
        })
        .collect()
}

impl Dqn {
    pub fn new(n_inputs: usize, n_actions: usize, cfg: &DqnConfig, rng: &mut dyn RngCore) -> Self {
        assert!((0.0..1.0).contains(&cfg.gamma), "discount must lie in [0, 1)");
        let mut sizes = vec![n_inputs];
        sizes.extend(&cfg.hidden);
        sizes.push(n_actions);
        let online = Mlp::new(&sizes, cfg.zero_output_init, rng);
        Self {
            target: online.clone(),
            adam: Adam::new(cfg.learning_rate, online.param_count()),
            online,
            gamma: cfg.gamma,
            batch_size: cfg.batch_size,
            sync_every: cfg.target_sync.max(1),
            train_steps: 0,
        }
    }

    pub fn q_values(&self, x: &[f64]) -> Vec<f64> {
        self.online.forward(x)
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    /// One optimiser step on a uniform minibatch; returns the minibatch loss.
    /// The target network is refreshed after every `sync_every` steps.
    pub fn train_step(
        &mut self,
        buffer: &ReplayBuffer<VecExperience>,
        rng: &mut dyn RngCore,
    ) -> Result<f64, AgentError> {
        if buffer.len() < self.batch_size {
            return Err(AgentError::BufferTooSmall {
                have: buffer.len(),
                need: self.batch_size,
            });
        }
        let batch = buffer.sample(self.batch_size, rng);
        let (loss, grads) = td_loss_and_grad(&self.online, &self.target, &batch, self.gamma);
        self.adam.step(&mut self.online, &grads);
        self.train_steps += 1;
        if self.train_steps.is_multiple_of(self.sync_every) {
            self.target_sync();
        }
        Ok(loss)
    }

    /// Hard copy of the online weights into the target network.
    pub fn target_sync(&mut self) {
        self.target.clone_from(&self.online);
    }

    pub fn save(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "saferl-dqn v1")?;
        writeln!(w, "gamma {}", self.gamma)?;
        writeln!(w, "sync_every {}", self.sync_every)?;
        writeln!(w, "train_steps {}", self.train_steps)?;
        writeln!(w, "online")?;
        self.online.save(w)?;
        writeln!(w, "target")?;
        self.target.save(w)
    }

    /// Restores both networks. The optimiser restarts from zero moments.
    pub fn load(r: &mut dyn BufRead, cfg: &DqnConfig) -> Result<Self, CheckpointError> {
        let mut lines = r.lines();
        let bad = |m: &str| CheckpointError::Format(m.to_string());
        let next = |lines: &mut io::Lines<&mut dyn BufRead>| -> Result<String, CheckpointError> {
            lines.next().transpose()?.ok_or_else(|| bad("truncated checkpoint"))
        };
        let header = next(&mut lines)?;
        if header.trim() != "saferl-dqn v1" {
            return Err(CheckpointError::Version(header));
        }
        let field = |name: &str, lines: &mut io::Lines<&mut dyn BufRead>| -> Result<String, CheckpointError> {
            let l = next(lines)?;
            l.strip_prefix(name)
                .map(|v| v.trim().to_string())
                .ok_or_else(|| bad(name))
        };
        let gamma: f64 = field("gamma", &mut lines)?.parse().map_err(|_| bad("gamma"))?;
        let sync_every: u64 = field("sync_every", &mut lines)?
            .parse()
            .map_err(|_| bad("sync_every"))?;
        let train_steps: u64 = field("train_steps", &mut lines)?
            .parse()
            .map_err(|_| bad("train_steps"))?;
        if !field("online", &mut lines)?.is_empty() {
            return Err(bad("online"));
        }
        let online = Mlp::load(&mut lines)?;
        if !field("target", &mut lines)?.is_empty() {
            return Err(bad("target"));
        }
        let target = Mlp::load(&mut lines)?;
        Ok(Self {
            adam: Adam::new(cfg.learning_rate, online.param_count()),
            online,
            target,
            gamma,
            batch_size: cfg.batch_size,
            sync_every,
            train_steps,
        })
    }
}

/// DQN learner over [`featurize`]d observations.
#[derive(Clone, Debug)]
pub struct DqnAgent {
    pub dqn: Dqn,
    pub buffer: ReplayBuffer<VecExperience>,
    train_every: u64,
    learn_start: usize,
    env_steps: u64,
}

impl DqnAgent {
    pub fn new(n_inputs: usize, n_actions: usize, cfg: &DqnConfig, rng: &mut dyn RngCore) -> Self {
        Self {
            dqn: Dqn::new(n_inputs, n_actions, cfg, rng),
            buffer: ReplayBuffer::new(cfg.buffer_capacity),
            train_every: cfg.train_every.max(1),
            learn_start: cfg.learn_start.max(cfg.batch_size),
            env_steps: 0,
        }
    }
}

impl ValueLearner for DqnAgent {
    fn kind(&self) -> &'static str {
        "dqn"
    }

    fn q_values(&mut self, obs: &Observation) -> Vec<f64> {
        self.dqn.q_values(&featurize(obs))
    }

    fn observe(&mut self, t: &Transition<'_>, rng: &mut dyn RngCore) -> Option<f64> {
        self.buffer.push(Experience {
            state: featurize(t.obs),
            action: t.action,
            reward: t.reward,
            next_state: featurize(t.next_obs),
            terminal: t.terminal,
        });
        self.env_steps += 1;
        if self.buffer.len() >= self.learn_start && self.env_steps.is_multiple_of(self.train_every) {
            self.dqn.train_step(&self.buffer, rng).ok()
        } else {
            None
        }
    }

    fn save(&self, w: &mut dyn Write) -> io::Result<()> {
        self.dqn.save(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> DqnConfig {
        DqnConfig {
            hidden: vec![8],
            batch_size: 4,
            buffer_capacity: 64,
            target_sync: 3,
            ..DqnConfig::default()
        }
    }

    #[test]
    fn too_small_buffer_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut dqn = Dqn::new(2, 2, &small_cfg(), &mut rng);
        let buf = ReplayBuffer::new(8);
        assert_eq!(
            dqn.train_step(&buf, &mut rng),
            Err(AgentError::BufferTooSmall { have: 0, need: 4 })
        );
    }

    #[test]
    fn identical_zero_transitions_have_zero_loss() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = DqnConfig {
            gamma: 0.0,
            zero_output_init: true,
            ..small_cfg()
        };
        let mut dqn = Dqn::new(2, 2, &cfg, &mut rng);
        let mut buf = ReplayBuffer::new(16);
        for _ in 0..8 {
            buf.push(Experience {
                state: vec![0.5, 0.25],
                action: 1,
                reward: 0.0,
                next_state: vec![0.5, 0.0],
                terminal: false,
            });
        }
        assert_eq!(dqn.train_step(&buf, &mut rng).unwrap(), 0.0);
    }

    #[test]
    fn terminal_target_is_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let dqn = Dqn::new(2, 3, &small_cfg(), &mut rng);
        let e = Experience {
            state: vec![0.1, 0.2],
            action: 0,
            reward: -1.0,
            next_state: vec![0.3, 0.4],
            terminal: true,
        };
        assert_eq!(td_targets(&dqn.target, &[&e], 0.99), vec![-1.0]);
        let open = Experience { terminal: false, ..e };
        assert_ne!(td_targets(&dqn.target, &[&open], 0.99), vec![-1.0]);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = small_cfg();
        let dqn = Dqn::new(3, 2, &cfg, &mut rng);
        let mut buf = Vec::new();
        dqn.save(&mut buf).unwrap();
        let back = Dqn::load(&mut buf.as_slice(), &cfg).unwrap();
        assert_eq!(back.online, dqn.online);
        assert_eq!(back.target, dqn.target);
        assert_eq!(back.sync_every, 3);
    }
}
