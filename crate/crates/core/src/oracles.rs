//! Plain reference models used for differential testing. Nothing here touches the simulator.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::grid::{Direction, Geometry, Position};
use crate::memory::StateCode;

/// Dictionary model of the memory: each entry carries a remaining lifetime in operations.
///
/// * learning a new or different state stores it with lifetime `h`, replacing the old state;
/// * relearning the stored state, or a successful recall, adds `h`; lifetimes cap at `2h`;
/// * every operation takes one unit off every other entry, dropping entries that reach zero.
#[derive(Clone, Debug, Default)]
pub struct DictMemory {
    horizon: u32,
    entries: BTreeMap<Position, (StateCode, u32)>,
}

impl DictMemory {
    pub fn new(horizon: u32) -> Self {
        DictMemory { horizon, entries: BTreeMap::new() }
    }

    fn age_others(&mut self, position: Position) {
        self.entries.retain(|&p, (_, life)| {
            if p != position {
                *life -= 1;
            }
            *life > 0
        });
    }

    pub fn learn(&mut self, position: Position, state: StateCode) {
        let h = self.horizon;
        let life = match self.entries.get(&position) {
            Some(&(s, life)) if s == state => (life + 2 * h).min(2 * h),
            _ => h,
        };
        self.entries.insert(position, (state, life));
        self.age_others(position);
    }

    pub fn recall(&mut self, position: Position) -> Option<StateCode> {
        let h = self.horizon;
        let answer = self.entries.get_mut(&position).map(|(s, life)| {
            *life = (*life + h).min(2 * h);
            *s
        });
        self.age_others(position);
        answer
    }

    pub fn reinforce(&mut self, position: Position, state: StateCode) {
        self.learn(position, state);
        self.recall(position);
    }

    pub fn contents(&self) -> Vec<(Position, StateCode)> {
        self.entries.iter().map(|(&p, &(s, _))| (p, s)).collect()
    }
}

/// Whether `goal` can be reached from `start` through non-obstacle cells.
pub fn bfs_reachable(geometry: Geometry, obstacles: &BTreeSet<Position>, start: Position, goal: Position) -> bool {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(p) = queue.pop_front() {
        if p == goal {
            return true;
        }
        for d in Direction::ALL {
            if let Ok(Some(n)) = geometry.neighbor(p, d) {
                if !obstacles.contains(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dict_lifetimes() {
        let mut m = DictMemory::new(3);
        m.learn(1, StateCode::Free);
        m.recall(2);
        m.recall(2);
        assert_eq!(m.recall(1), Some(StateCode::Free));
        m.learn(1, StateCode::Obstacle);
        for _ in 0..3 {
            m.recall(5);
        }
        assert_eq!(m.recall(1), None);
    }

    #[test]
    fn bfs_walls() {
        let g = Geometry::new(3, 3);
        assert!(bfs_reachable(g, &BTreeSet::new(), 1, 9));
        assert!(!bfs_reachable(g, &BTreeSet::from([2, 4]), 1, 9));
    }
}
