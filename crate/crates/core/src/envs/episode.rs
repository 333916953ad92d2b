//! Interaction records: single transitions and whole episodes.

use serde::{Deserialize, Serialize};

/// One `(s, a, r, s', done)` interaction record; the unit of both replay and
/// demonstration storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: Vec<f64>,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub done: bool,
}

/// An ordered list of transitions with its undiscounted return.
#[derive(Debug, Clone, Default)]
pub struct Episode {
    pub transitions: Vec<Transition>,
    pub total_return: f64,
}

impl Episode {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, t: Transition) {
        debug_assert!(
            self.transitions.last().map_or(true, |prev| !prev.done),
            "pushing past a done transition"
        );
        self.total_return += t.r;
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(r: f64, done: bool) -> Transition {
        Transition {
            s: vec![0.0],
            a: vec![0.0],
            r,
            s_next: vec![0.0],
            done,
        }
    }

    #[test]
    fn total_return_is_sum_of_rewards() {
        let mut ep = Episode::new();
        ep.push(t(1.5, false));
        ep.push(t(-0.5, false));
        ep.push(t(100.0, true));
        assert_eq!(ep.total_return, 101.0);
        assert_eq!(ep.len(), 3);
    }

    #[test]
    fn only_final_transition_is_done() {
        let mut ep = Episode::new();
        ep.push(t(0.0, false));
        ep.push(t(0.0, true));
        let done_count = ep.transitions.iter().filter(|x| x.done).count();
        assert_eq!(done_count, 1);
        assert!(ep.transitions.last().unwrap().done);
    }
}
