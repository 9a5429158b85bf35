//! Deterministic grid-world environments.
//!
//! Both environments share one object-list observation and one set of car
//! dynamics: the agent moves first, then every car advances horizontally with
//! wrap-around. A collision happens when the agent and a car end up in the
//! same cell, or when they swap cells during the step.

mod crossroad;
mod freeway;

pub use crossroad::Crossroad;
pub use freeway::FreewayGrid;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::Action;

/// Cell coordinates: `x` grows rightward, `y` grows downward.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct GridPoint {
    pub x: i32,
    pub y: i32,
}

impl GridPoint {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn chebyshev(self, other: GridPoint) -> u32 {
        (self.x - other.x)
            .unsigned_abs()
            .max((self.y - other.y).unsigned_abs())
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectKind {
    Agent,
    Car,
}

impl ObjectKind {
    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::Agent => "agent",
            ObjectKind::Car => "car",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EnvObject {
    pub id: String,
    pub kind: ObjectKind,
    pub pos: GridPoint,
    /// Cells per step.
    pub velocity: (i32, i32),
}

/// Object-list view of an environment state.
///
/// Objects keep a stable order within an episode: the agent first, then cars
/// in lane order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Observation {
    pub objects: Vec<EnvObject>,
    pub step_index: usize,
    pub width: i32,
    pub height: i32,
}

impl Observation {
    pub fn agent(&self) -> Option<&EnvObject> {
        self.objects.iter().find(|o| o.kind == ObjectKind::Agent)
    }

    pub fn cars(&self) -> impl Iterator<Item = &EnvObject> {
        self.objects.iter().filter(|o| o.kind == ObjectKind::Car)
    }

    fn agent_mut(&mut self) -> Option<&mut EnvObject> {
        self.objects.iter_mut().find(|o| o.kind == ObjectKind::Agent)
    }

    pub fn in_bounds(&self, p: GridPoint) -> bool {
        (0..self.width).contains(&p.x) && (0..self.height).contains(&p.y)
    }

    /// ASCII rendering for debugging: `A` agent, `>`/`<` cars, `X` overlap.
    pub fn render(&self) -> String {
        let mut grid = vec![vec!['.'; self.width as usize]; self.height as usize];
        for car in self.cars() {
            let c = if car.velocity.0 >= 0 { '>' } else { '<' };
            grid[car.pos.y as usize][car.pos.x as usize] = c;
        }
        if let Some(a) = self.agent() {
            let cell = &mut grid[a.pos.y as usize][a.pos.x as usize];
            *cell = if *cell == '.' { 'A' } else { 'X' };
        }
        grid.into_iter()
            .map(|row| row.into_iter().collect::<String>())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub obs: Observation,
    pub reward: f64,
    pub done: bool,
    pub collided: bool,
    /// Episode ended only because the step cap was hit.
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// +1 on success, -1 on collision, 0 otherwise.
    #[default]
    Default,
    /// +1 on success, 0 otherwise.
    ZeroOne,
}

/// One car lane. `direction` is +1 (rightward) or -1 (leftward).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lane {
    pub row: i32,
    pub direction: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub width: i32,
    pub height: i32,
    pub lanes: Vec<Lane>,
    pub car_speed: i32,
    pub max_steps: usize,
    pub reward_mode: RewardMode,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self::crossroad()
    }
}

impl EnvConfig {
    /// 9x9 grid, seven lanes in rows 1..=7 with alternating directions.
    pub fn crossroad() -> Self {
        Self {
            width: 9,
            height: 9,
            lanes: alternating_lanes(1..=7),
            car_speed: 1,
            max_steps: 100,
            reward_mode: RewardMode::Default,
        }
    }

    /// 9 wide, ten lanes between the start row and the goal row.
    pub fn freeway() -> Self {
        Self {
            width: 9,
            height: 12,
            lanes: alternating_lanes(1..=10),
            car_speed: 1,
            max_steps: 200,
            reward_mode: RewardMode::Default,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: String| Err(EnvError::InvalidConfig(m));
        if self.width < 3 || self.height < 3 {
            return bad(format!("grid {}x{} is smaller than 3x3", self.width, self.height));
        }
        if self.max_steps == 0 {
            return bad("max_steps must be at least 1".into());
        }
        if self.car_speed < 0 || self.car_speed >= self.width {
            return bad(format!("car_speed {} outside 0..{}", self.car_speed, self.width));
        }
        let mut rows: Vec<i32> = self.lanes.iter().map(|l| l.row).collect();
        rows.sort_unstable();
        if rows.windows(2).any(|w| w[0] == w[1]) {
            return bad("two lanes share a row".into());
        }
        for lane in &self.lanes {
            if lane.row < 1 || lane.row > self.height - 2 {
                return bad(format!(
                    "lane row {} must lie strictly between the goal row and the start row",
                    lane.row
                ));
            }
            if lane.direction.abs() != 1 {
                return bad(format!("lane direction {} is not +1 or -1", lane.direction));
            }
        }
        Ok(())
    }

    fn start_point(&self) -> GridPoint {
        GridPoint::new(self.width / 2, self.height - 1)
    }
}

fn alternating_lanes(rows: std::ops::RangeInclusive<i32>) -> Vec<Lane> {
    rows.map(|row| Lane {
        row,
        direction: if row % 2 == 1 { 1 } else { -1 },
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("step called on a finished episode")]
    EpisodeFinished,
    #[error("action `{0}` is not available in this environment")]
    IllegalAction(Action),
    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),
}

/// Pure one-step transition predictor.
pub trait ForwardModel: Send + Sync {
    /// Next observation and whether the transition collides.
    fn predict(&self, obs: &Observation, action: Action) -> (Observation, bool);
}

pub trait Environment: Send {
    fn name(&self) -> &'static str;
    fn actions(&self) -> &[Action];
    fn config(&self) -> &EnvConfig;
    fn reset(&mut self, seed: u64) -> Observation;
    fn step(&mut self, action: Action) -> Result<StepResult, EnvError>;
    fn model(&self) -> Arc<dyn ForwardModel>;

    fn forward_model(&self, obs: &Observation, action: Action) -> (Observation, bool) {
        self.model().predict(obs, action)
    }
}

pub const ENVIRONMENTS: [&str; 2] = ["crossroad", "freeway"];

/// Builds a registered environment by name.
pub fn make_env(name: &str, config: EnvConfig) -> Result<Box<dyn Environment>, EnvError> {
    match name {
        "crossroad" => Ok(Box::new(Crossroad::new(config)?)),
        "freeway" => Ok(Box::new(FreewayGrid::new(config)?)),
        other => Err(EnvError::UnknownEnvironment(other.to_string())),
    }
}

/// Default configuration for a registered environment.
pub fn default_config(name: &str) -> Result<EnvConfig, EnvError> {
    match name {
        "crossroad" => Ok(EnvConfig::crossroad()),
        "freeway" => Ok(EnvConfig::freeway()),
        other => Err(EnvError::UnknownEnvironment(other.to_string())),
    }
}

/// Car positions for a fresh episode: one car per lane at a seeded column.
fn initial_observation(config: &EnvConfig, seed: u64) -> Observation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut objects = Vec::with_capacity(config.lanes.len() + 1);
    objects.push(EnvObject {
        id: "agent".to_string(),
        kind: ObjectKind::Agent,
        pos: config.start_point(),
        velocity: (0, 0),
    });
    for (i, lane) in config.lanes.iter().enumerate() {
        objects.push(EnvObject {
            id: format!("car{}", i + 1),
            kind: ObjectKind::Car,
            pos: GridPoint::new(rng.gen_range(0..config.width), lane.row),
            velocity: (lane.direction * config.car_speed, 0),
        });
    }
    Observation {
        objects,
        step_index: 0,
        width: config.width,
        height: config.height,
    }
}

/// Moves the agent (clamped) and then every car (wrapped), reporting whether
/// the agent overlapped or swapped cells with any car. The agent's velocity
/// becomes the displacement it just made.
fn advance(obs: &Observation, action: Action) -> (Observation, bool) {
    let mut next = obs.clone();
    next.step_index += 1;
    let Some(agent) = obs.agent() else {
        return (next, false);
    };
    let from = agent.pos;
    let (dx, dy) = action.delta();
    let to = GridPoint::new(
        (from.x + dx).clamp(0, obs.width - 1),
        (from.y + dy).clamp(0, obs.height - 1),
    );
    let mut collided = false;
    for obj in next.objects.iter_mut() {
        match obj.kind {
            ObjectKind::Agent => {
                obj.pos = to;
                obj.velocity = (to.x - from.x, to.y - from.y);
            }
            ObjectKind::Car => {
                let old = obj.pos;
                let new = GridPoint::new(
                    (old.x + obj.velocity.0).rem_euclid(obs.width),
                    (old.y + obj.velocity.1).rem_euclid(obs.height),
                );
                obj.pos = new;
                if new == to || (old == to && new == from) {
                    collided = true;
                }
            }
        }
    }
    (next, collided)
}
