use std::fmt;

/// The eight cell states, indexed by content neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateCode {
    Start = 0,
    Goal = 1,
    /// Never stored; a recall miss reads as unexplored.
    Unexplored = 2,
    StepInPath = 3,
    Crossroad = 4,
    Free = 5,
    Obstacle = 6,
    DeadEnd = 7,
}

impl StateCode {
    pub const ALL: [StateCode; 8] = [
        StateCode::Start,
        StateCode::Goal,
        StateCode::Unexplored,
        StateCode::StepInPath,
        StateCode::Crossroad,
        StateCode::Free,
        StateCode::Obstacle,
        StateCode::DeadEnd,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<StateCode> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            StateCode::Start => "start",
            StateCode::Goal => "goal",
            StateCode::Unexplored => "unexplored",
            StateCode::StepInPath => "step-in-path",
            StateCode::Crossroad => "crossroad",
            StateCode::Free => "free",
            StateCode::Obstacle => "obstacle",
            StateCode::DeadEnd => "dead-end",
        }
    }

    /// States the decision circuit reacts to.
    pub fn is_of_interest(self) -> bool {
        matches!(self, StateCode::Goal | StateCode::StepInPath | StateCode::Crossroad)
    }
}

impl fmt::Display for StateCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
