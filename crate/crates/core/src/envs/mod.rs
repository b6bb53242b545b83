//! Episodic tasks whose one-step reward is linear in a fixed feature map,
//! `r = phi(s, a, s') . w`. Teacher and student tasks on the same
//! environment differ only in `w`, so their similarity is the cosine of the
//! two weight vectors.

mod avoid;
mod lane;
mod reacher;
mod task;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::approximator::{Action, ActionSpace};
use crate::error::{Error, Result};

pub use task::{auto_normalizer, cosine_similarity, make_task_pair, EnvId, TaskPair, TaskSpec};

/// One environment transition.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub next_state: Vec<f64>,
    pub features: Vec<f64>,
    /// `spec.reward(&features)`.
    pub reward: f64,
    /// The episode is over (terminal state or horizon reached).
    pub done: bool,
    /// The episode ended in a true terminal state, so nothing is bootstrapped
    /// past it. `done && !terminal` is a time-limit truncation.
    pub terminal: bool,
}

pub(crate) struct Outcome {
    observation: Vec<f64>,
    features: Vec<f64>,
    terminal: bool,
}

#[derive(Debug, Clone)]
enum Dynamics {
    Reacher(reacher::GoalReacher),
    Lane(lane::LaneGrid),
    Avoid(avoid::AvoidGrid),
}

/// A running episode of a [`TaskSpec`].
#[derive(Debug, Clone)]
pub struct EnvInstance {
    spec: TaskSpec,
    dynamics: Dynamics,
    rng: ChaCha8Rng,
    seed: u64,
    steps: usize,
    started: bool,
    done: bool,
}

impl EnvInstance {
    pub fn new(spec: TaskSpec) -> Result<Self> {
        spec.validate()?;
        let dynamics = match spec.env_id {
            EnvId::GoalReacher { dims, continuous } => Dynamics::Reacher(reacher::GoalReacher::new(dims, continuous)),
            EnvId::LaneGrid => Dynamics::Lane(lane::LaneGrid::new()),
            EnvId::AvoidGrid => Dynamics::Avoid(avoid::AvoidGrid::new()),
        };
        Ok(Self {
            spec,
            dynamics,
            rng: ChaCha8Rng::seed_from_u64(0),
            seed: 0,
            steps: 0,
            started: false,
            done: false,
        })
    }

    pub fn spec(&self) -> &TaskSpec {
        &self.spec
    }

    /// Replaces the reward weights, keeping the dynamics. Teacher policies
    /// act in the student's task this way.
    pub fn set_spec(&mut self, spec: TaskSpec) -> Result<()> {
        spec.validate()?;
        if spec.env_id != self.spec.env_id {
            return Err(Error::contract("task spec belongs to a different environment"));
        }
        self.spec = spec;
        Ok(())
    }

    pub fn observation_dim(&self) -> usize {
        self.spec.env_id.observation_dim()
    }

    pub fn action_space(&self) -> ActionSpace {
        self.spec.env_id.action_space()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Starts a new episode. The start state depends only on `seed`.
    pub fn reset(&mut self, seed: u64) -> Vec<f64> {
        self.seed = seed;
        self.rng = ChaCha8Rng::seed_from_u64(seed);
        self.steps = 0;
        self.started = true;
        self.done = false;
        match &mut self.dynamics {
            Dynamics::Reacher(env) => env.reset(&mut self.rng),
            Dynamics::Lane(env) => env.reset(&mut self.rng),
            Dynamics::Avoid(env) => env.reset(&mut self.rng),
        }
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult> {
        if !self.started {
            return Err(Error::contract("step before reset"));
        }
        if self.done {
            return Err(Error::contract("step after the episode finished"));
        }
        let outcome = match &mut self.dynamics {
            Dynamics::Reacher(env) => env.step(action)?,
            Dynamics::Lane(env) => env.step(action, &mut self.rng)?,
            Dynamics::Avoid(env) => env.step(action, &mut self.rng)?,
        };
        self.steps += 1;
        self.done = outcome.terminal || self.steps >= self.spec.episode_horizon;
        Ok(StepResult {
            reward: self.spec.reward(&outcome.features),
            next_state: outcome.observation,
            features: outcome.features,
            done: self.done,
            terminal: outcome.terminal,
        })
    }

    /// Episode summary: goal reached (0/1) for the reacher, fraction of the
    /// track covered for the grid tracks.
    pub fn aux_metric(&self) -> f64 {
        match &self.dynamics {
            Dynamics::Reacher(env) => env.aux_metric(),
            Dynamics::Lane(env) => env.aux_metric(),
            Dynamics::Avoid(env) => env.aux_metric(),
        }
    }

    /// Goal position of a reacher episode.
    pub fn goal(&self) -> Option<&[f64]> {
        match &self.dynamics {
            Dynamics::Reacher(env) => Some(env.goal()),
            _ => None,
        }
    }

    /// Moves the reacher goal, e.g. to place the agent exactly on it.
    pub fn set_goal(&mut self, goal: &[f64]) -> Result<()> {
        match &mut self.dynamics {
            Dynamics::Reacher(env) if env.goal().len() == goal.len() => {
                env.set_goal(goal);
                Ok(())
            }
            _ => Err(Error::contract("set_goal needs a reacher of matching dimension")),
        }
    }
}
