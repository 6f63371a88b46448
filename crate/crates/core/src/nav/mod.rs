//! Iterative map-and-decide loop driving the memory and the decision circuit.
//!
//! Each Normal iteration senses the three egocentric neighbours and stores any cell the memory
//! does not know yet, then opens a decision window: a Searching spike starts the PPC chain while
//! the four allocentric neighbours are recalled in slot order (up, left, down, right), each recall
//! timed so its content spike meets the matching Delay slot. Outputs that point back into cells
//! already visited are masked, except for the goal. Without an honoured output the navigator
//! plans a step itself (closest free cell by Manhattan distance) and marks it step-in-path, which
//! the PPC then acts on in the next iteration. With nothing to plan the cell is a dead end and
//! the agent walks back along its path, marking the cells it leaves as dead ends, until it finds
//! a cell with unexplored options.

mod report;

pub use report::{render_ascii, RunReport};

use std::collections::{BTreeMap, BTreeSet};

use crate::grid::{Direction, EnvConfig, EnvError, Environment, Geometry, Pose, Position};
use crate::memory::{Hippocampus, MemoryConfig, MemoryError, StateCode};
use crate::ppc::{Ppc, PpcConfig, PpcError};
use crate::scalar::Scalar;
use crate::snn::{LifParams, Network, NetworkBuilder, SnnError, Tick};

/// PPC slot order.
pub const SLOTS: [Direction; 4] = [Direction::N, Direction::W, Direction::S, Direction::E];

/// Content states feeding MatchIn lines 0, 1, 2.
pub const TAPPED: [StateCode; 3] = [StateCode::Goal, StateCode::StepInPath, StateCode::Crossroad];

const TAP_DELAY: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NavConfig {
    /// Forgetting horizon of the map memory, in operations.
    pub forget_horizon: u32,
    pub guard: Tick,
    pub init_delay: u32,
    pub step_delay: u32,
    /// Defaults to ten times the number of cells.
    pub max_iterations: Option<u32>,
}

impl Default for NavConfig {
    fn default() -> Self {
        NavConfig { forget_horizon: 1000, guard: 30, init_delay: 9, step_delay: 7, max_iterations: None }
    }
}

/// What the controller knows up front: grid size, start, goal and initial heading.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Task {
    pub geometry: Geometry,
    pub start: Position,
    pub goal: Position,
    pub heading: Direction,
}

impl Task {
    pub fn from_config(c: &EnvConfig) -> Self {
        Task { geometry: Geometry::new(c.width, c.height), start: c.start, goal: c.goal, heading: c.initial_heading }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Normal,
    Backtracking,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NavState {
    pub mode: Mode,
    pub pose: Pose,
    pub predecessor: Option<Position>,
    pub iteration: u32,
    pub done: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecisionOutcome {
    Move(Direction),
    Planned(Position),
    DeadEnd,
    GoalReached,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum NavError {
    #[error("livelock: no path to the goal is left from position {0}")]
    Livelock(Position),
    #[error("iteration cap of {0} exceeded")]
    IterationCap(u32),
    #[error("corrupted map at position {0}: {1}")]
    CorruptedMap(Position, String),
    #[error("invalid task: {0}")]
    Task(String),
    #[error(transparent)]
    Environment(#[from] EnvError),
    #[error(transparent)]
    Memory(#[from] MemoryError),
    #[error(transparent)]
    Ppc(#[from] PpcError),
    #[error(transparent)]
    Snn(#[from] SnnError),
}

impl NavError {
    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            NavError::Livelock(_) | NavError::IterationCap(_) => "livelock",
            NavError::CorruptedMap(..) => "corrupted-map",
            NavError::Task(_) => "invalid-task",
            NavError::Environment(EnvError::Transport(_)) => "transport",
            NavError::Environment(_) => "environment",
            NavError::Memory(_) | NavError::Ppc(_) | NavError::Snn(_) => "internal",
        }
    }
}

/// A failed run together with everything recorded up to the failure.
#[derive(Debug)]
pub struct RunFailure {
    pub error: NavError,
    pub report: RunReport,
}

/// Memory and decision circuit sharing one network, with the content tap wired in.
#[derive(Clone, Debug)]
pub struct Brain<F> {
    pub net: Network<F>,
    pub memory: Hippocampus<F>,
    pub ppc: Ppc,
}

impl<F: Scalar> Brain<F> {
    pub fn new(geometry: Geometry, config: &NavConfig) -> Result<Self, NavError> {
        let mut builder = NetworkBuilder::new();
        let mem_config = MemoryConfig::new(geometry.width, geometry.height)
            .with_horizon(config.forget_horizon)
            .with_guard(config.guard);
        let memory = Hippocampus::install(&mut builder, mem_config)?;
        let ppc = Ppc::install(
            &mut builder,
            PpcConfig::new(SLOTS.len(), TAPPED.len(), config.init_delay, config.step_delay),
        )?;
        if ppc.delay_tick(0, 0) < TAP_DELAY as Tick + 1 {
            return Err(NavError::Task("init_delay too short to fit the first recall".into()));
        }
        if (config.step_delay as Tick) < mem_config.min_recall_spacing() {
            return Err(NavError::Task("step_delay shorter than the recall spacing".into()));
        }
        let drive = F::lit(1.2) * LifParams::<F>::default().theta();
        builder.connect_pairs(
            memory.layout().content,
            ppc.layout().match_in,
            TAPPED.iter().enumerate().map(|(line, s)| (s.index(), line)),
            drive,
            TAP_DELAY,
        );
        Ok(Brain { net: builder.build()?, memory, ppc })
    }

    fn next_free(&self) -> Tick {
        self.memory.ready_at().max(self.net.now())
    }

    /// Recall tick whose content spike reaches MatchIn in the same tick as Delay `slot`.
    fn recall_tick(&self, searching: Tick, slot: usize) -> Tick {
        self.ppc.delay_tick(searching, slot) - TAP_DELAY as Tick - 1
    }
}

type OutSpikes = Vec<(Tick, usize)>;

/// Recalled neighbour in one PPC slot.
#[derive(Clone, Copy, Debug)]
struct Slot {
    direction: Direction,
    target: Option<Position>,
    state: Option<StateCode>,
}

pub struct Navigator<F> {
    task: Task,
    brain: Brain<F>,
    state: NavState,
    parent: BTreeMap<Position, Option<Position>>,
    visited: BTreeSet<Position>,
    trajectory: Vec<Position>,
    events: Vec<String>,
    windows: Vec<(Tick, Tick)>,
    commands: Vec<(u32, Tick, Direction)>,
    max_iterations: u32,
}

impl<F: Scalar> Navigator<F> {
    pub fn new(task: Task, config: NavConfig) -> Result<Self, NavError> {
        let g = task.geometry;
        if !g.contains(task.start) || !g.contains(task.goal) {
            return Err(NavError::Task("start and goal must lie on the grid".into()));
        }
        Ok(Navigator {
            task,
            brain: Brain::new(g, &config)?,
            state: NavState {
                mode: Mode::Normal,
                pose: Pose::new(task.start, task.heading),
                predecessor: None,
                iteration: 1,
                done: task.start == task.goal,
            },
            parent: BTreeMap::from([(task.start, None)]),
            visited: BTreeSet::from([task.start]),
            trajectory: Vec::new(),
            events: Vec::new(),
            windows: Vec::new(),
            commands: Vec::new(),
            max_iterations: config.max_iterations.unwrap_or(10 * g.cells()),
        })
    }

    pub fn state(&self) -> &NavState {
        &self.state
    }

    pub fn brain(&self) -> &Brain<F> {
        &self.brain
    }

    fn log(&mut self, phase: &str, op: &str, positions: &[Position], states: &[Option<StateCode>]) {
        let pos: Vec<_> = positions.iter().map(|p| p.to_string()).collect();
        let st: Vec<_> = states.iter().map(|s| s.unwrap_or(StateCode::Unexplored).name()).collect();
        self.events.push(format!(
            "iteration={} phase={phase} op={op} positions={} states={}",
            self.state.iteration,
            pos.join(";"),
            st.join(";")
        ));
    }

    fn recall(&mut self, phase: &str, p: Position) -> Result<Option<StateCode>, NavError> {
        let t = self.brain.next_free();
        let s = self.brain.memory.recall(&mut self.brain.net, p, t)?;
        self.log(phase, "recall", &[p], &[s]);
        Ok(s)
    }

    fn reinforce(&mut self, phase: &str, p: Position, s: StateCode) -> Result<(), NavError> {
        let t = self.brain.next_free();
        self.brain.memory.reinforce(&mut self.brain.net, p, s, t)?;
        self.log(phase, "reinforce", &[p], &[Some(s)]);
        Ok(())
    }

    fn neighbor(&self, p: Position, d: Direction) -> Option<Position> {
        self.task.geometry.neighbor(p, d).ok().flatten()
    }

    /// Stores start and goal. Safe to repeat.
    pub fn initialize(&mut self) -> Result<(), NavError> {
        self.reinforce("init", self.task.start, StateCode::Start)?;
        if self.task.goal != self.task.start {
            self.reinforce("init", self.task.goal, StateCode::Goal)?;
        }
        Ok(())
    }

    /// Senses right, front and left and stores whatever the memory reports as unexplored.
    pub fn mapping_phase(&mut self, env: &mut dyn Environment) -> Result<(), NavError> {
        let seen = env.sense(self.state.pose)?;
        for obs in seen {
            let Some(q) = obs.target else { continue };
            if self.recall("mapping", q)?.is_none() {
                let s = match obs.kind {
                    crate::grid::CellKind::Goal => StateCode::Goal,
                    crate::grid::CellKind::Obstacle => StateCode::Obstacle,
                    crate::grid::CellKind::Free => StateCode::Free,
                };
                self.reinforce("mapping", q, s)?;
            }
        }
        Ok(())
    }

    /// Searching spike plus a recall burst over the four slots. Returns the recalled slots
    /// and the commands fired inside the window, in firing order.
    fn decision_window(&mut self, phase: &str) -> Result<(Vec<Slot>, OutSpikes), NavError> {
        let here = self.state.pose.position;
        let t_s = self.brain.next_free();
        self.brain.ppc.start(&mut self.brain.net, t_s)?;
        let mut slots: Vec<Slot> =
            SLOTS.iter().map(|&d| Slot { direction: d, target: self.neighbor(here, d), state: None }).collect();
        let requests: Vec<_> = slots
            .iter()
            .enumerate()
            .filter_map(|(k, s)| s.target.map(|p| (p, self.brain.recall_tick(t_s, k))))
            .collect();
        let answers = self.brain.memory.recall_burst(&mut self.brain.net, &requests)?;
        let mut answers = answers.into_iter();
        for s in slots.iter_mut().filter(|s| s.target.is_some()) {
            s.state = answers.next().flatten();
        }
        let end = self.brain.ppc.window_end(t_s);
        self.brain.net.run_until(end + 1);
        self.windows.push((t_s, end));
        let outs = self.brain.ppc.outputs(&self.brain.net, t_s, end)?;
        let (pos, st): (Vec<_>, Vec<_>) = slots.iter().filter_map(|s| s.target.map(|p| (p, s.state))).unzip();
        self.log(phase, "decide", &pos, &st);
        Ok((slots, outs))
    }

    /// Ego order used to break distance ties: left, front, right, behind.
    fn ego_rank(&self, d: Direction) -> usize {
        let h = self.state.pose.heading;
        [h.turn_left(), h, h.turn_right(), h.opposite()].iter().position(|&x| x == d).unwrap()
    }

    pub fn decision_phase(&mut self, env: &mut dyn Environment) -> Result<DecisionOutcome, NavError> {
        let here = self.state.pose.position;
        let (slots, outs) = self.decision_window("decision")?;
        for &(tick, cmd) in &outs {
            let Some(q) = slots[cmd].target else { continue };
            if q == self.task.goal || !self.visited.contains(&q) {
                let d = slots[cmd].direction;
                self.commands.push((self.state.iteration, tick, d));
                self.step_to(env, d, q)?;
                self.parent.entry(q).or_insert(Some(here));
                return Ok(if q == self.task.goal { DecisionOutcome::GoalReached } else { DecisionOutcome::Move(d) });
            }
        }
        let candidates: Vec<_> = slots
            .iter()
            .filter(|s| s.state == Some(StateCode::Free))
            .filter_map(|s| s.target.map(|p| (s.direction, p)))
            .filter(|(_, p)| !self.visited.contains(p))
            .collect();
        if candidates.is_empty() {
            return Ok(DecisionOutcome::DeadEnd);
        }
        let next = self.global_plan(&candidates)?;
        Ok(DecisionOutcome::Planned(next))
    }

    /// Picks the candidate closest to the goal and marks the path.
    fn global_plan(&mut self, candidates: &[(Direction, Position)]) -> Result<Position, NavError> {
        let g = self.task.geometry;
        let goal = self.task.goal;
        let &(_, best) = candidates
            .iter()
            .min_by_key(|(d, p)| (g.manhattan(*p, goal), self.ego_rank(*d)))
            .expect("caller checked candidates");
        self.reinforce("plan", best, StateCode::StepInPath)?;
        let here_state = if candidates.len() >= 2 { StateCode::Crossroad } else { StateCode::StepInPath };
        self.reinforce("plan", self.state.pose.position, here_state)?;
        Ok(best)
    }

    fn step_to(&mut self, env: &mut dyn Environment, d: Direction, q: Position) -> Result<(), NavError> {
        let pose = env.apply_move(self.state.pose, d)?;
        if pose.position != q {
            return Err(EnvError::Protocol(format!("moved to {} instead of {q}", pose.position)).into());
        }
        self.state.predecessor = Some(self.state.pose.position);
        self.state.pose = pose;
        self.visited.insert(q);
        self.trajectory.push(q);
        Ok(())
    }

    /// Unvisited neighbours that are free or unexplored.
    fn options(&mut self, p: Position) -> Result<usize, NavError> {
        let mut n = 0;
        for d in SLOTS {
            let Some(q) = self.neighbor(p, d) else { continue };
            if self.visited.contains(&q) {
                continue;
            }
            if matches!(self.recall("backtrack", q)?, None | Some(StateCode::Free)) {
                n += 1;
            }
        }
        Ok(n)
    }

    /// One backward cell, or the decision to resume or give up at the start.
    pub fn backtrack_step(&mut self, env: &mut dyn Environment) -> Result<(), NavError> {
        let here = self.state.pose.position;
        let Some(pred) = self.parent.get(&here).copied().flatten() else {
            if self.options(here)? > 0 {
                self.state.mode = Mode::Normal;
                self.log("backtrack", "resume", &[here], &[]);
                return Ok(());
            }
            return Err(NavError::Livelock(here));
        };
        let (slots, outs) = self.decision_window("backtrack")?;
        let Some(&(tick, cmd)) = outs.iter().find(|(_, c)| slots[*c].target == Some(pred)) else {
            return Err(NavError::CorruptedMap(here, format!("no path mark on predecessor {pred}")));
        };
        if self.recall("backtrack", here)? == Some(StateCode::StepInPath) {
            self.reinforce("backtrack", here, StateCode::DeadEnd)?;
        }
        let d = slots[cmd].direction;
        self.commands.push((self.state.iteration, tick, d));
        self.step_to(env, d, pred)?;
        self.state.predecessor = self.parent.get(&pred).copied().flatten();
        let state = self.recall("backtrack", pred)?;
        let options = self.options(pred)?;
        if options > 0 {
            self.state.mode = Mode::Normal;
            if options == 1 && state == Some(StateCode::Crossroad) {
                self.reinforce("backtrack", pred, StateCode::StepInPath)?;
            }
        } else if state != Some(StateCode::StepInPath) {
            self.reinforce("backtrack", pred, StateCode::StepInPath)?;
        }
        Ok(())
    }

    fn iterate(&mut self, env: &mut dyn Environment) -> Result<(), NavError> {
        match self.state.mode {
            Mode::Normal => {
                self.mapping_phase(env)?;
                match self.decision_phase(env)? {
                    DecisionOutcome::GoalReached => self.state.done = true,
                    DecisionOutcome::Move(_) | DecisionOutcome::Planned(_) => {}
                    DecisionOutcome::DeadEnd => {
                        let back = self.state.pose.heading.opposite();
                        self.state.pose = env.turn(self.state.pose, back)?;
                        self.state.mode = Mode::Backtracking;
                        self.log("decision", "dead-end", &[self.state.pose.position], &[]);
                    }
                }
            }
            Mode::Backtracking => self.backtrack_step(env)?,
        }
        Ok(())
    }

    /// Initializes the memory and iterates until the goal is reached or the run fails.
    pub fn run(mut self, env: &mut dyn Environment) -> Result<RunReport, Box<RunFailure>> {
        let result = self.run_loop(env);
        let report = self.report();
        match result {
            Ok(()) => Ok(report),
            Err(error) => Err(Box::new(RunFailure { error, report })),
        }
    }

    fn run_loop(&mut self, env: &mut dyn Environment) -> Result<(), NavError> {
        self.initialize()?;
        while !self.state.done {
            if self.state.iteration > self.max_iterations {
                self.state.iteration = self.max_iterations;
                return Err(NavError::IterationCap(self.max_iterations));
            }
            self.iterate(env)?;
            if !self.state.done {
                self.state.iteration += 1;
            }
        }
        Ok(())
    }

    fn report(&self) -> RunReport {
        let spikes: Vec<_> = self.brain.net.spike_log().copied().collect();
        RunReport {
            geometry: self.task.geometry,
            start: self.task.start,
            goal: self.task.goal,
            reached_goal: self.state.done,
            iterations: self.state.iteration,
            trajectory: self.trajectory.clone(),
            map: self.brain.memory.snapshot(&self.brain.net),
            events: self.events.clone(),
            raster: crate::snn::write_spike_csv(&self.brain.net, &spikes),
            decision_windows: self.windows.clone(),
            commands: self.commands.clone(),
            out_spikes: self.brain.ppc.outputs(&self.brain.net, 0, self.brain.net.now()).unwrap_or_default(),
        }
    }
}
