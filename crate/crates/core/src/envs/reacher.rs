use rand::Rng;

use super::Outcome;
use crate::approximator::Action;
use crate::error::{check_dim, Error, Result};

pub(crate) const DESCRIPTION: &str = "\
  A point mass starts at the origin; the goal is drawn uniformly from
  [-1, 1]^d at reset. Positions are clamped to [-1.5, 1.5]^d. Discrete
  actions displace the point by a fixed step (1d: -0.2, -0.1, 0, 0.1, 0.2;
  2d: each axis in {-0.1, 0, 0.1}). Continuous actions are clipped to
  [-1, 1]^d and scaled by 0.2. Observation: (position, goal - position).
  No terminal state; episodes end at the horizon.
";

const ARENA: f64 = 1.5;
const GOAL_RANGE: f64 = 1.0;
pub(crate) const GOAL_TOLERANCE: f64 = 0.1;
const CONTINUOUS_SCALE: f64 = 0.2;
const STEPS_1D: [f64; 5] = [-0.2, -0.1, 0.0, 0.1, 0.2];
const STEPS_2D: [f64; 3] = [-0.1, 0.0, 0.1];

pub(crate) fn max_distance(dims: usize) -> f64 {
    (ARENA + GOAL_RANGE) * (dims as f64).sqrt()
}

pub(crate) fn discrete_action_count(dims: usize) -> usize {
    if dims == 1 {
        STEPS_1D.len()
    } else {
        STEPS_2D.len().pow(dims as u32)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct GoalReacher {
    dims: usize,
    continuous: bool,
    position: Vec<f64>,
    goal: Vec<f64>,
}

impl GoalReacher {
    pub(crate) fn new(dims: usize, continuous: bool) -> Self {
        Self {
            dims,
            continuous,
            position: vec![0.0; dims],
            goal: vec![0.0; dims],
        }
    }

    pub(crate) fn goal(&self) -> &[f64] {
        &self.goal
    }

    pub(crate) fn set_goal(&mut self, goal: &[f64]) {
        self.goal.copy_from_slice(goal);
    }

    pub(crate) fn reset<R: Rng>(&mut self, rng: &mut R) -> Vec<f64> {
        self.position.fill(0.0);
        for g in self.goal.iter_mut() {
            *g = rng.random_range(-GOAL_RANGE..=GOAL_RANGE);
        }
        self.observe()
    }

    pub(crate) fn observe(&self) -> Vec<f64> {
        let mut obs = self.position.clone();
        obs.extend(self.goal.iter().zip(&self.position).map(|(g, p)| g - p));
        obs
    }

    fn distance(&self) -> f64 {
        self.goal
            .iter()
            .zip(&self.position)
            .map(|(g, p)| (g - p) * (g - p))
            .sum::<f64>()
            .sqrt()
    }

    /// Displacement and its magnitude normalised to `[0, 1]`.
    fn displacement(&self, action: &Action) -> Result<(Vec<f64>, f64)> {
        match (action, self.continuous) {
            (Action::Discrete(a), false) => {
                let n = discrete_action_count(self.dims);
                if *a >= n {
                    return Err(Error::contract(format!("action {a} outside {n} actions")));
                }
                let disp: Vec<f64> = if self.dims == 1 {
                    vec![STEPS_1D[*a]]
                } else {
                    let mut rem = *a;
                    (0..self.dims)
                        .map(|_| {
                            let d = STEPS_2D[rem % STEPS_2D.len()];
                            rem /= STEPS_2D.len();
                            d
                        })
                        .collect()
                };
                let max_norm = if self.dims == 1 { 0.2 } else { 0.1 * (self.dims as f64).sqrt() };
                let norm = disp.iter().map(|x| x * x).sum::<f64>().sqrt();
                Ok((disp, norm / max_norm))
            }
            (Action::Continuous(v), true) => {
                check_dim("continuous action", self.dims, v.len())?;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("action"));
                }
                let clipped: Vec<f64> = v.iter().map(|x| x.clamp(-1.0, 1.0)).collect();
                let norm = clipped.iter().map(|x| x * x).sum::<f64>().sqrt();
                let disp = clipped.iter().map(|x| x * CONTINUOUS_SCALE).collect();
                Ok((disp, norm / (self.dims as f64).sqrt()))
            }
            _ => Err(Error::contract("action kind does not match the action space")),
        }
    }

    pub(crate) fn step(&mut self, action: &Action) -> Result<Outcome> {
        let (disp, magnitude) = self.displacement(action)?;
        for (p, d) in self.position.iter_mut().zip(&disp) {
            *p = (*p + d).clamp(-ARENA, ARENA);
        }
        let dist = self.distance();
        let reached = if dist <= GOAL_TOLERANCE { 1.0 } else { 0.0 };
        Ok(Outcome {
            observation: self.observe(),
            features: vec![-dist, -magnitude, reached],
            terminal: false,
        })
    }

    /// 1 when the episode ends within the goal tolerance.
    pub(crate) fn aux_metric(&self) -> f64 {
        if self.distance() <= GOAL_TOLERANCE {
            1.0
        } else {
            0.0
        }
    }
}
