//! Ground-truth grid world with egocentric sensing.
//!
//! Positions are 1-based and row-major (`id = row * width + col + 1`), rows grow downward.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub type Position = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    N,
    E,
    S,
    W,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::N, Direction::E, Direction::S, Direction::W];

    pub fn opposite(self) -> Direction {
        self.turn_right().turn_right()
    }

    pub fn turn_right(self) -> Direction {
        match self {
            Direction::N => Direction::E,
            Direction::E => Direction::S,
            Direction::S => Direction::W,
            Direction::W => Direction::N,
        }
    }

    pub fn turn_left(self) -> Direction {
        self.turn_right().opposite()
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::N => "up",
            Direction::E => "right",
            Direction::S => "down",
            Direction::W => "left",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pose {
    pub position: Position,
    pub heading: Direction,
}

impl Pose {
    pub fn new(position: Position, heading: Direction) -> Self {
        Pose { position, heading }
    }

    /// Right, front and left directions for this heading.
    pub fn egocentric(&self) -> [Direction; 3] {
        [self.heading.turn_right(), self.heading, self.heading.turn_left()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellKind {
    Obstacle,
    Free,
    Goal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CellObservation {
    /// `None` for the wall beyond the grid edge.
    pub target: Option<Position>,
    pub kind: CellKind,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GridError {
    #[error("position {0} is off the grid")]
    OffGrid(Position),
    #[error("invalid environment: {0}")]
    Invalid(String),
    #[error("cannot read environment config: {0}")]
    Config(String),
}

/// Failure of an environment call, local or remote.
#[derive(Debug, thiserror::Error, PartialEq, Eq, Clone)]
pub enum EnvError {
    #[error("move blocked by obstacle or wall")]
    Blocked,
    #[error("position {0} is off the grid")]
    OffGrid(Position),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
}

/// Width and height plus the id arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Geometry {
    pub width: u32,
    pub height: u32,
}

impl Geometry {
    pub fn new(width: u32, height: u32) -> Self {
        Geometry { width, height }
    }

    pub fn cells(&self) -> u32 {
        self.width * self.height
    }

    pub fn contains(&self, p: Position) -> bool {
        p >= 1 && p <= self.cells()
    }

    /// Zero-based (row, col).
    pub fn row_col(&self, p: Position) -> (u32, u32) {
        ((p - 1) / self.width, (p - 1) % self.width)
    }

    pub fn at(&self, row: u32, col: u32) -> Position {
        row * self.width + col + 1
    }

    pub fn neighbor(&self, p: Position, d: Direction) -> Result<Option<Position>, GridError> {
        if !self.contains(p) {
            return Err(GridError::OffGrid(p));
        }
        let (r, c) = self.row_col(p);
        Ok(match d {
            Direction::N if r > 0 => Some(self.at(r - 1, c)),
            Direction::S if r + 1 < self.height => Some(self.at(r + 1, c)),
            Direction::W if c > 0 => Some(self.at(r, c - 1)),
            Direction::E if c + 1 < self.width => Some(self.at(r, c + 1)),
            _ => None,
        })
    }

    pub fn manhattan(&self, a: Position, b: Position) -> u32 {
        let (ra, ca) = self.row_col(a);
        let (rb, cb) = self.row_col(b);
        ra.abs_diff(rb) + ca.abs_diff(cb)
    }

    /// Direction from `a` to the adjacent cell `b`.
    pub fn direction_to(&self, a: Position, b: Position) -> Option<Direction> {
        Direction::ALL.into_iter().find(|&d| self.neighbor(a, d).ok().flatten() == Some(b))
    }
}

/// What the navigator needs from the world: egocentric sensing and allocentric motion.
pub trait Environment {
    /// Right, front, left observations for `pose`.
    fn sense(&mut self, pose: Pose) -> Result<[CellObservation; 3], EnvError>;
    fn apply_move(&mut self, pose: Pose, direction: Direction) -> Result<Pose, EnvError>;
    /// Turns in place.
    fn turn(&mut self, pose: Pose, heading: Direction) -> Result<Pose, EnvError>;
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridEnv {
    pub geometry: Geometry,
    pub obstacles: BTreeSet<Position>,
    pub start: Position,
    pub goal: Position,
}

impl GridEnv {
    pub fn new(
        width: u32,
        height: u32,
        obstacles: impl IntoIterator<Item = Position>,
        start: Position,
        goal: Position,
    ) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::Invalid("grid must be at least 1x1".into()));
        }
        let geometry = Geometry::new(width, height);
        let obstacles: BTreeSet<_> = obstacles.into_iter().collect();
        for &p in obstacles.iter().chain([start, goal].iter()) {
            if !geometry.contains(p) {
                return Err(GridError::OffGrid(p));
            }
        }
        if obstacles.contains(&start) || obstacles.contains(&goal) {
            return Err(GridError::Invalid("start and goal must be free".into()));
        }
        Ok(GridEnv { geometry, obstacles, start, goal })
    }

    pub fn neighbor(&self, p: Position, d: Direction) -> Result<Option<Position>, GridError> {
        self.geometry.neighbor(p, d)
    }

    pub fn observe(&self, p: Position, d: Direction) -> CellObservation {
        match self.geometry.neighbor(p, d).ok().flatten() {
            None => CellObservation { target: None, kind: CellKind::Obstacle },
            Some(t) if self.obstacles.contains(&t) => CellObservation { target: Some(t), kind: CellKind::Obstacle },
            Some(t) if t == self.goal => CellObservation { target: Some(t), kind: CellKind::Goal },
            Some(t) => CellObservation { target: Some(t), kind: CellKind::Free },
        }
    }

    pub fn sense(&self, pose: Pose) -> [CellObservation; 3] {
        pose.egocentric().map(|d| self.observe(pose.position, d))
    }

    pub fn apply_move(&self, pose: Pose, direction: Direction) -> Result<Pose, EnvError> {
        match self.geometry.neighbor(pose.position, direction) {
            Err(_) => Err(EnvError::OffGrid(pose.position)),
            Ok(Some(t)) if !self.obstacles.contains(&t) => Ok(Pose::new(t, direction)),
            Ok(_) => Err(EnvError::Blocked),
        }
    }
}

impl Environment for GridEnv {
    fn sense(&mut self, pose: Pose) -> Result<[CellObservation; 3], EnvError> {
        if !self.geometry.contains(pose.position) {
            return Err(EnvError::OffGrid(pose.position));
        }
        Ok(GridEnv::sense(self, pose))
    }

    fn apply_move(&mut self, pose: Pose, direction: Direction) -> Result<Pose, EnvError> {
        GridEnv::apply_move(self, pose, direction)
    }

    fn turn(&mut self, pose: Pose, heading: Direction) -> Result<Pose, EnvError> {
        Ok(Pose::new(pose.position, heading))
    }
}

/// Environment file: `width`, `height`, `obstacles`, `start`, `goal`, `initial_heading`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub width: u32,
    pub height: u32,
    #[serde(default)]
    pub obstacles: Vec<Position>,
    pub start: Position,
    pub goal: Position,
    pub initial_heading: Direction,
}

impl EnvConfig {
    pub fn parse(text: &str) -> Result<Self, GridError> {
        toml::from_str(text).map_err(|e| GridError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GridError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GridError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_env(&self) -> Result<GridEnv, GridError> {
        GridEnv::new(self.width, self.height, self.obstacles.iter().copied(), self.start, self.goal)
    }

    pub fn initial_pose(&self) -> Pose {
        Pose::new(self.start, self.initial_heading)
    }
}
