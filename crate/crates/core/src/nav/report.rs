use crate::grid::{Direction, Geometry, Position};
use crate::memory::{map_dump, StateCode};
use crate::snn::Tick;

/// Everything a run produced. Also returned, partially filled, when a run fails.
#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub geometry: Geometry,
    pub start: Position,
    pub goal: Position,
    pub reached_goal: bool,
    pub iterations: u32,
    /// Cells entered by moves, in order. The start is not included.
    pub trajectory: Vec<Position>,
    /// Recallable associations at the end of the run, row-major.
    pub map: Vec<(Position, StateCode)>,
    /// One line per memory or decision operation.
    pub events: Vec<String>,
    /// Full spike raster as `tick,population,neuron` lines.
    pub raster: String,
    pub decision_windows: Vec<(Tick, Tick)>,
    /// Honoured commands as (iteration, output spike tick, direction).
    pub commands: Vec<(u32, Tick, Direction)>,
    /// Every PPC output spike of the run as (tick, command).
    pub out_spikes: Vec<(Tick, usize)>,
}

impl RunReport {
    /// Start followed by the trajectory, one position per line.
    pub fn trajectory_text(&self) -> String {
        std::iter::once(self.start).chain(self.trajectory.iter().copied()).map(|p| format!("{p}\n")).collect()
    }

    pub fn map_table(&self) -> String {
        map_dump(&self.map)
    }

    pub fn map_ascii(&self) -> String {
        render_ascii(self.geometry, &self.map)
    }

    pub fn events_text(&self) -> String {
        self.events.iter().map(|l| format!("{l}\n")).collect()
    }

    pub fn state_of(&self, p: Position) -> Option<StateCode> {
        self.map.iter().find(|(q, _)| *q == p).map(|&(_, s)| s)
    }

    /// Share of cells with a stored state.
    pub fn coverage(&self) -> f64 {
        self.map.len() as f64 / self.geometry.cells() as f64
    }
}

/// One character per cell: `S` start, `G` goal, `.` free, `#` obstacle, `*` step-in-path,
/// `+` crossroad, `X` dead end, space for unexplored.
pub fn render_ascii(geometry: Geometry, map: &[(Position, StateCode)]) -> String {
    let mut out = String::new();
    for row in 0..geometry.height {
        for col in 0..geometry.width {
            let p = geometry.at(row, col);
            let c = match map.iter().find(|(q, _)| *q == p).map(|&(_, s)| s) {
                Some(StateCode::Start) => 'S',
                Some(StateCode::Goal) => 'G',
                Some(StateCode::Free) => '.',
                Some(StateCode::Obstacle) => '#',
                Some(StateCode::StepInPath) => '*',
                Some(StateCode::Crossroad) => '+',
                Some(StateCode::DeadEnd) => 'X',
                Some(StateCode::Unexplored) | None => ' ',
            };
            out.push(c);
        }
        out.push('\n');
    }
    out
}
