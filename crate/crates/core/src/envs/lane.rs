use rand::Rng;

use super::Outcome;
use crate::approximator::Action;
use crate::error::{Error, Result};

pub(crate) const DESCRIPTION: &str = "\
  A straight track of 20 cells with four rows: inner shoulder (off track),
  inner lane, outer lane, outer shoulder (off track). The car starts at
  cell 0 in a random lane. Actions: 0 advance, 1 advance and move inward,
  2 advance and move outward, 3 sprint two cells (drifts outward with
  probability 0.25), 4 hold. Leaving the lanes or finishing the track ends
  the episode. Observation: (x / length, one-hot row).
";

pub(crate) const N_ACTIONS: usize = 5;
pub(crate) const OBSERVATION_DIM: usize = 5;
const LENGTH: i64 = 20;
const INNER: i64 = 1;
const OUTER: i64 = 2;
const SPRINT_DRIFT: f64 = 0.25;

#[derive(Debug, Clone)]
pub(crate) struct LaneGrid {
    x: i64,
    row: i64,
}

impl LaneGrid {
    pub(crate) fn new() -> Self {
        Self { x: 0, row: INNER }
    }

    pub(crate) fn reset<R: Rng>(&mut self, rng: &mut R) -> Vec<f64> {
        self.x = 0;
        self.row = if rng.random_bool(0.5) { INNER } else { OUTER };
        self.observe()
    }

    pub(crate) fn observe(&self) -> Vec<f64> {
        let mut obs = vec![0.0; OBSERVATION_DIM];
        obs[0] = self.x as f64 / LENGTH as f64;
        obs[1 + self.row as usize] = 1.0;
        obs
    }

    pub(crate) fn step<R: Rng>(&mut self, action: &Action, rng: &mut R) -> Result<Outcome> {
        let a = action
            .as_discrete()
            .filter(|a| *a < N_ACTIONS)
            .ok_or_else(|| Error::contract(format!("lane-grid expects a discrete action below {N_ACTIONS}")))?;
        let (advance, shift) = match a {
            0 => (1, 0),
            1 => (1, -1),
            2 => (1, 1),
            3 => (2, if rng.random_bool(SPRINT_DRIFT) { 1 } else { 0 }),
            _ => (0, 0),
        };
        let before = self.x;
        self.x = (self.x + advance).min(LENGTH);
        self.row += shift;
        let off_track = self.row != INNER && self.row != OUTER;
        let finished = self.x >= LENGTH;
        let features = vec![
            (self.x - before) as f64 / 2.0,
            if self.row == INNER { 1.0 } else { 0.0 },
            if self.row == OUTER { 1.0 } else { 0.0 },
            if off_track { 1.0 } else { 0.0 },
        ];
        Ok(Outcome {
            observation: self.observe(),
            features,
            terminal: off_track || finished,
        })
    }

    /// Fraction of the track covered.
    pub(crate) fn aux_metric(&self) -> f64 {
        self.x as f64 / LENGTH as f64
    }
}
