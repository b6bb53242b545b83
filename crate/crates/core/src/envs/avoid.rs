use rand::Rng;

use super::Outcome;
use crate::approximator::Action;
use crate::error::{Error, Result};

pub(crate) const DESCRIPTION: &str = "\
  A three-lane track of 20 cells shared with three bot cars placed at
  random cells ahead of the agent. Each step the agent acts (0 advance,
  1 advance and shift left, 2 advance and shift right, 3 hold), then every
  bot advances with probability 0.5 and changes to a random adjacent lane
  with probability 0.1. Sharing a cell with a bot is a crash and ends the
  episode, as does reaching the end of the track. Observation:
  (x / length, one-hot lane, per-lane gap to the nearest bot ahead / 5).
";

pub(crate) const N_ACTIONS: usize = 4;
pub(crate) const OBSERVATION_DIM: usize = 7;
const LENGTH: i64 = 20;
const LANES: i64 = 3;
const N_BOTS: usize = 3;
const BOT_ADVANCE: f64 = 0.5;
const BOT_LANE_CHANGE: f64 = 0.1;
const GAP_HORIZON: i64 = 5;
const PROXIMITY: i64 = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Car {
    x: i64,
    lane: i64,
}

#[derive(Debug, Clone)]
pub(crate) struct AvoidGrid {
    agent: Car,
    bots: Vec<Car>,
}

impl AvoidGrid {
    pub(crate) fn new() -> Self {
        Self {
            agent: Car { x: 0, lane: 1 },
            bots: Vec::new(),
        }
    }

    pub(crate) fn reset<R: Rng>(&mut self, rng: &mut R) -> Vec<f64> {
        self.agent = Car { x: 0, lane: 1 };
        self.bots.clear();
        while self.bots.len() < N_BOTS {
            let bot = Car {
                x: rng.random_range(3..LENGTH - 2),
                lane: rng.random_range(0..LANES),
            };
            if !self.bots.contains(&bot) {
                self.bots.push(bot);
            }
        }
        self.observe()
    }

    fn gap_ahead(&self, lane: i64) -> i64 {
        self.bots
            .iter()
            .filter(|b| b.lane == lane && b.x > self.agent.x)
            .map(|b| b.x - self.agent.x)
            .min()
            .unwrap_or(GAP_HORIZON)
            .min(GAP_HORIZON)
    }

    pub(crate) fn observe(&self) -> Vec<f64> {
        let mut obs = vec![0.0; OBSERVATION_DIM];
        obs[0] = self.agent.x as f64 / LENGTH as f64;
        obs[1 + self.agent.lane as usize] = 1.0;
        for lane in 0..LANES {
            obs[4 + lane as usize] = self.gap_ahead(lane) as f64 / GAP_HORIZON as f64;
        }
        obs
    }

    fn collided(&self) -> bool {
        self.bots.contains(&self.agent)
    }

    pub(crate) fn step<R: Rng>(&mut self, action: &Action, rng: &mut R) -> Result<Outcome> {
        let a = action
            .as_discrete()
            .filter(|a| *a < N_ACTIONS)
            .ok_or_else(|| Error::contract(format!("avoid-grid expects a discrete action below {N_ACTIONS}")))?;
        let (advance, shift) = match a {
            0 => (1, 0),
            1 => (1, -1),
            2 => (1, 1),
            _ => (0, 0),
        };
        let before = self.agent.x;
        self.agent.x = (self.agent.x + advance).min(LENGTH);
        self.agent.lane = (self.agent.lane + shift).clamp(0, LANES - 1);
        let mut collision = self.collided();
        if !collision {
            for bot in self.bots.iter_mut() {
                if rng.random_bool(BOT_ADVANCE) {
                    bot.x += 1;
                }
                if rng.random_bool(BOT_LANE_CHANGE) {
                    let dir = if rng.random_bool(0.5) { 1 } else { -1 };
                    bot.lane = (bot.lane + dir).clamp(0, LANES - 1);
                }
            }
            collision = self.collided();
        }
        let completed = !collision && self.agent.x >= LENGTH;
        let near = self.gap_ahead(self.agent.lane) <= PROXIMITY
            && self
                .bots
                .iter()
                .any(|b| b.lane == self.agent.lane && b.x > self.agent.x);
        let features = vec![
            (self.agent.x - before) as f64,
            if near { 1.0 } else { 0.0 },
            if collision { 1.0 } else { 0.0 },
            if completed { 1.0 } else { 0.0 },
        ];
        Ok(Outcome {
            observation: self.observe(),
            features,
            terminal: collision || completed,
        })
    }

    pub(crate) fn aux_metric(&self) -> f64 {
        self.agent.x as f64 / LENGTH as f64
    }
}
