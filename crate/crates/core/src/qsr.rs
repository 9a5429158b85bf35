//! Qualitative spatial relations between the agent and nearby objects.
//!
//! Directions use eight 45° cones centred on the compass axes, with north
//! pointing toward decreasing `y`. A point lying exactly on a cone boundary
//! belongs to the cardinal cone. Distances are two-level: `close` within a
//! Chebyshev radius, `far` beyond it.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::envs::{GridPoint, ObjectKind, Observation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    N,
    NE,
    E,
    SE,
    S,
    SW,
    W,
    NW,
    Same,
}

impl Direction {
    pub const ALL: [Direction; 9] = [
        Direction::N,
        Direction::NE,
        Direction::E,
        Direction::SE,
        Direction::S,
        Direction::SW,
        Direction::W,
        Direction::NW,
        Direction::Same,
    ];

    /// Predicate name used in relations and rules.
    pub fn name(self) -> &'static str {
        match self {
            Direction::N => "n",
            Direction::NE => "ne",
            Direction::E => "e",
            Direction::SE => "se",
            Direction::S => "s",
            Direction::SW => "sw",
            Direction::W => "w",
            Direction::NW => "nw",
            Direction::Same => "same",
        }
    }

    pub fn from_name(name: &str) -> Option<Direction> {
        Direction::ALL.into_iter().find(|d| d.name() == name)
    }

    pub fn opposite(self) -> Direction {
        use Direction::*;
        match self {
            N => S,
            NE => SW,
            E => W,
            SE => NW,
            S => N,
            SW => NE,
            W => E,
            NW => SE,
            Same => Same,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Distance {
    Close,
    Far,
}

impl Distance {
    pub fn name(self) -> &'static str {
        match self {
            Distance::Close => "close",
            Distance::Far => "far",
        }
    }
}

/// Counter-clockwise cone order starting at east, in 45° steps.
const CONES: [Direction; 8] = [
    Direction::E,
    Direction::NE,
    Direction::N,
    Direction::NW,
    Direction::W,
    Direction::SW,
    Direction::S,
    Direction::SE,
];

/// Cone containing `target` as seen from `reference`.
pub fn direction_of(reference: GridPoint, target: GridPoint) -> Direction {
    if reference == target {
        return Direction::Same;
    }
    let dx = f64::from(target.x - reference.x);
    let north = f64::from(reference.y - target.y);
    let sector = north.atan2(dx).to_degrees() / 45.0;
    let lower = sector.floor();
    let k = if (sector - lower - 0.5).abs() < 1e-9 {
        // boundary: pick whichever neighbour is a cardinal (even sector)
        if (lower as i64).rem_euclid(2) == 0 {
            lower
        } else {
            lower + 1.0
        }
    } else {
        sector.round()
    };
    CONES[(k as i64).rem_euclid(8) as usize]
}

/// `Close` iff the Chebyshev distance is at most `d_close`.
pub fn distance_of(reference: GridPoint, target: GridPoint, d_close: u32) -> Distance {
    if reference.chebyshev(target) <= d_close {
        Distance::Close
    } else {
        Distance::Far
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QsrParams {
    pub d_close: u32,
    pub region_radius: u32,
    /// Measure horizontal offsets around a road whose columns wrap, so an
    /// object just across the left edge counts as west of an agent at the
    /// right edge.
    pub wrap_x: bool,
}

impl QsrParams {
    pub fn new(d_close: u32, region_radius: u32) -> Self {
        Self {
            d_close,
            region_radius,
            wrap_x: false,
        }
    }

    pub fn wrapping(self) -> Self {
        Self { wrap_x: true, ..self }
    }
}

impl Default for QsrParams {
    fn default() -> Self {
        Self::new(2, 2)
    }
}

/// Ground binary relation `predicate(subject, object)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Relation {
    pub predicate: String,
    pub subject: String,
    pub object: String,
}

impl Relation {
    pub fn new(predicate: &str, subject: &str, object: &str) -> Self {
        Self {
            predicate: predicate.to_string(),
            subject: subject.to_string(),
            object: object.to_string(),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.predicate, self.subject, self.object)
    }
}

/// Predicates the extractor can emit, all binary.
pub const PREDICATES: [&str; 13] = [
    "n", "ne", "e", "se", "s", "sw", "w", "nw", "same", "close", "far", "type", "heading",
];

/// Set of ground relations describing the agent's surroundings.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SymbolicState {
    relations: BTreeSet<Relation>,
}

impl SymbolicState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, relation: Relation) -> bool {
        self.relations.insert(relation)
    }

    pub fn contains(&self, relation: &Relation) -> bool {
        self.relations.contains(relation)
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Relation> {
        self.relations.iter()
    }

    /// Relations whose predicate is `predicate`, in sorted order.
    pub fn with_predicate<'a>(&'a self, predicate: &'a str) -> impl Iterator<Item = &'a Relation> {
        let start = Relation::new(predicate, "", "");
        self.relations
            .range(start..)
            .take_while(move |r| r.predicate == predicate)
    }

    /// Every constant mentioned by some relation.
    pub fn constants(&self) -> BTreeSet<&str> {
        self.relations
            .iter()
            .flat_map(|r| [r.subject.as_str(), r.object.as_str()])
            .collect()
    }

    pub fn is_subset(&self, other: &SymbolicState) -> bool {
        self.relations.is_subset(&other.relations)
    }
}

impl FromIterator<Relation> for SymbolicState {
    fn from_iter<I: IntoIterator<Item = Relation>>(iter: I) -> Self {
        Self {
            relations: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for SymbolicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, r) in self.relations.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{r}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QsrError {
    #[error("observation has no agent object")]
    MissingAgent,
}

fn heading_of(velocity: (i32, i32)) -> Direction {
    direction_of(GridPoint::default(), GridPoint::new(velocity.0, velocity.1))
}

/// Copy of `target` shifted by a multiple of `width` so that its horizontal
/// offset from `reference` is as small as possible (ties keep the offset
/// positive).
pub fn nearest_image(reference: GridPoint, target: GridPoint, width: i32) -> GridPoint {
    let dx = (target.x - reference.x).rem_euclid(width);
    let dx = if dx > width / 2 { dx - width } else { dx };
    GridPoint::new(reference.x + dx, target.y)
}

/// Agent-centric relations for every object inside the extraction region.
///
/// Each object within Chebyshev distance `region_radius` of the agent yields
/// `dir(agent, obj)`, `close|far(agent, obj)` and `type(obj, kind)`. Moving
/// objects, the agent included, additionally yield `heading(obj, dir)` with
/// the cone of their
/// velocity.
pub fn extract_relations(obs: &Observation, params: QsrParams) -> Result<SymbolicState, QsrError> {
    let agent = obs.agent().ok_or(QsrError::MissingAgent)?;
    let mut state = SymbolicState::new();
    if agent.velocity != (0, 0) {
        state.insert(Relation::new("heading", &agent.id, heading_of(agent.velocity).name()));
    }
    for obj in &obs.objects {
        if obj.kind == ObjectKind::Agent {
            continue;
        }
        let pos = if params.wrap_x {
            nearest_image(agent.pos, obj.pos, obs.width)
        } else {
            obj.pos
        };
        if agent.pos.chebyshev(pos) > params.region_radius {
            continue;
        }
        let dir = direction_of(agent.pos, pos);
        let dist = distance_of(agent.pos, pos, params.d_close);
        state.insert(Relation::new(dir.name(), &agent.id, &obj.id));
        state.insert(Relation::new(dist.name(), &agent.id, &obj.id));
        state.insert(Relation::new("type", &obj.id, obj.kind.name()));
        if obj.velocity != (0, 0) {
            state.insert(Relation::new("heading", &obj.id, heading_of(obj.velocity).name()));
        }
    }
    Ok(state)
}
