use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::buffer::{BufferSource, TrajectoryBuffer, Transition};
use crate::approximator::{Action, ActionDistribution, ActionSpace, PolicyNetwork};
use crate::envs::{EnvInstance, TaskSpec};
use crate::error::{Error, Result};
use crate::seeding;

/// Anything that maps a state to an action distribution.
pub trait Policy: Sync {
    fn action_space(&self) -> ActionSpace;

    fn observation_dim(&self) -> usize;

    fn action_distribution(&self, state: &[f64]) -> Result<ActionDistribution>;

    /// Log-probability recorded as the behaviour log-prob of a sampled action.
    fn behavior_log_prob(&self, dist: &ActionDistribution, action: &Action) -> Result<f64> {
        dist.log_prob(action)
    }
}

impl Policy for PolicyNetwork {
    fn action_space(&self) -> ActionSpace {
        PolicyNetwork::action_space(self)
    }

    fn observation_dim(&self) -> usize {
        PolicyNetwork::observation_dim(self)
    }

    fn action_distribution(&self, state: &[f64]) -> Result<ActionDistribution> {
        self.forward(state)
    }
}

/// How much experience to gather.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// Exactly this many transitions; the last episode may be cut short.
    Steps(usize),
    Episodes(usize),
}

fn check_compatible<P: Policy + ?Sized>(policy: &P, env: &EnvInstance) -> Result<()> {
    if policy.action_space() != env.action_space() {
        return Err(Error::contract(format!(
            "policy action space {:?} does not match environment {:?}",
            policy.action_space(),
            env.action_space()
        )));
    }
    if policy.observation_dim() != env.observation_dim() {
        return Err(Error::DimensionMismatch {
            context: "policy observation",
            expected: env.observation_dim(),
            actual: policy.observation_dim(),
        });
    }
    Ok(())
}

/// Runs `policy` in `env`, sampling actions from `rng`. Episode start seeds
/// are drawn from `rng` too, so the buffer is a function of the policy, the
/// task and the generator state.
pub fn collect<S, P, R>(policy: &P, env: &mut EnvInstance, budget: Budget, rng: &mut R) -> Result<TrajectoryBuffer<S>>
where
    S: BufferSource,
    P: Policy + ?Sized,
    R: Rng + RngCore,
{
    check_compatible(policy, env)?;
    let mut buffer = TrajectoryBuffer::new();
    let (step_limit, episode_limit) = match budget {
        Budget::Steps(n) => (n, usize::MAX),
        Budget::Episodes(n) => (usize::MAX, n),
    };
    let mut episodes = 0;
    while buffer.len() < step_limit && episodes < episode_limit {
        let mut state = env.reset(rng.next_u64());
        let mut episode_return = 0.0;
        loop {
            let dist = policy.action_distribution(&state)?;
            let action = dist.sample(rng);
            let log_prob = policy.behavior_log_prob(&dist, &action)?;
            if !log_prob.is_finite() {
                return Err(Error::NonFinite("behaviour log-probability"));
            }
            let step = env.step(&action)?;
            episode_return += step.reward;
            let cut = buffer.len() + 1 >= step_limit;
            buffer.push(Transition {
                state: std::mem::take(&mut state),
                action,
                next_state: step.next_state.clone(),
                reward: step.reward,
                log_prob_behavior: log_prob,
                done: step.done || cut,
                terminal: step.terminal,
            });
            if step.done {
                buffer.record_episode_return(episode_return);
                break;
            }
            if cut {
                break;
            }
            state = step.next_state;
        }
        episodes += 1;
    }
    Ok(buffer)
}

/// Splits `budget` over `workers` independent environments, each with its
/// own generator derived from `seed`, and concatenates the results in worker
/// order.
pub fn collect_parallel<S, P>(
    policy: &P,
    spec: &TaskSpec,
    budget: Budget,
    workers: usize,
    seed: u64,
) -> Result<TrajectoryBuffer<S>>
where
    S: BufferSource,
    P: Policy + ?Sized,
{
    let workers = workers.max(1);
    let split = |n: usize, i: usize| n / workers + usize::from(i < n % workers);
    let parts: Vec<Result<TrajectoryBuffer<S>>> = (0..workers)
        .into_par_iter()
        .map(|i| {
            let share = match budget {
                Budget::Steps(n) => Budget::Steps(split(n, i)),
                Budget::Episodes(n) => Budget::Episodes(split(n, i)),
            };
            let mut env = EnvInstance::new(spec.clone())?;
            let mut rng = seeding::stream_rng(seed, seeding::streams::STUDENT_ROLLOUT, i as u64);
            collect(policy, &mut env, share, &mut rng)
        })
        .collect();
    let mut merged = TrajectoryBuffer::new();
    for part in parts {
        merged.append(part?);
    }
    Ok(merged)
}
