//! Clipped-PPO actor-critic: the baseline learner that transfer extends.

mod objective;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::approximator::{ActionSpace, Direction, Optimizer, OptimizerKind, PolicyHead, PolicyNetwork, ValueNetwork};
use crate::envs::EnvInstance;
use crate::error::{Error, Result};
use crate::rollout::{self, Budget, GaeConfig, Policy, Student, Teacher, TrajectoryBuffer};
use crate::seeding::{self, streams};

pub use objective::{
    clip_ratio, clipped_surrogate, clipped_term, clipped_term_log_grad, likelihood_ratio, mean_entropy,
    ActorObjective, ObjectiveParts, Sample,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    /// Clip range of the likelihood ratio.
    pub clip: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub optimizer: OptimizerKind,
    pub gae: GaeConfig,
    /// Student rollout size per iteration.
    pub rollout_steps: Option<usize>,
    pub rollout_episodes: Option<usize>,
    pub hidden: Vec<usize>,
    pub normalize_advantages: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.2,
            epochs: 10,
            minibatch_size: 64,
            entropy_coef: 1e-4,
            actor_lr: 3e-4,
            critic_lr: 3e-4,
            optimizer: OptimizerKind::adam(),
            gae: GaeConfig {
                gamma: 0.99,
                lambda: 0.95,
            },
            rollout_steps: Some(2048),
            rollout_episodes: None,
            hidden: vec![64, 64],
            normalize_advantages: true,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return Err(Error::config("ppo.clip must lie in (0, 1)"));
        }
        if self.epochs == 0 || self.minibatch_size == 0 {
            return Err(Error::config("ppo.epochs and ppo.minibatch_size must be at least 1"));
        }
        if !(self.entropy_coef >= 0.0) {
            return Err(Error::config("ppo.entropy_coef must be non-negative"));
        }
        if !(self.actor_lr >= 0.0 && self.critic_lr >= 0.0) {
            return Err(Error::config("learning rates must be non-negative"));
        }
        self.gae.validate()?;
        self.rollout_budget().map(|_| ())
    }

    pub fn rollout_budget(&self) -> Result<Budget> {
        match (self.rollout_steps, self.rollout_episodes) {
            (Some(n), None) if n > 0 => Ok(Budget::Steps(n)),
            (None, Some(n)) if n > 0 => Ok(Budget::Episodes(n)),
            _ => Err(Error::config("set exactly one positive rollout_steps or rollout_episodes")),
        }
    }
}

/// Actor and critic with their optimiser states.
#[derive(Debug, Clone)]
pub struct ActorCritic {
    pub actor: PolicyNetwork,
    pub critic: ValueNetwork,
    pub actor_opt: Optimizer,
    pub critic_opt: Optimizer,
}

impl ActorCritic {
    /// Fresh networks initialised from `seed`.
    pub fn new(observation_dim: usize, action_space: ActionSpace, cfg: &PpoConfig, seed: u64) -> Self {
        let actor = PolicyNetwork::new(
            observation_dim,
            &cfg.hidden,
            PolicyHead::for_space(action_space),
            seeding::derive_seed(seed, streams::INIT, 0),
        );
        let critic = ValueNetwork::new(observation_dim, &cfg.hidden, seeding::derive_seed(seed, streams::INIT, 1));
        Self::from_networks(actor, critic, cfg)
    }

    pub fn from_networks(actor: PolicyNetwork, critic: ValueNetwork, cfg: &PpoConfig) -> Self {
        let actor_opt = Optimizer::new(cfg.optimizer, cfg.actor_lr, actor.n_params());
        let critic_opt = Optimizer::new(cfg.optimizer, cfg.critic_lr, critic.params().len());
        Self {
            actor,
            critic,
            actor_opt,
            critic_opt,
        }
    }
}

/// Mean squared error `mean_i (V(s_i) - y_i)^2` and its gradient.
pub fn critic_mse(critic: &ValueNetwork, states: &[&[f64]], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if states.len() != targets.len() || states.is_empty() {
        return Err(Error::contract("critic regression needs aligned, non-empty states and targets"));
    }
    let n = states.len() as f64;
    let mut grad = vec![0.0; critic.params().len()];
    let mut loss = 0.0;
    for (s, y) in states.iter().zip(targets) {
        let (v, cache) = critic.value_cached(s)?;
        let r = v - y;
        loss += r * r / n;
        critic.backward(&cache, 2.0 * r / n, &mut grad);
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite("critic loss"));
    }
    Ok((loss, grad))
}

fn minibatches<R: Rng>(n: usize, size: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx.chunks(size.max(1)).map(|c| c.to_vec()).collect()
}

/// Regresses the critic onto the buffer's returns. Only student-collected
/// buffers are accepted. Returns the loss of every minibatch before its
/// update.
///
/// Teacher experience is rejected at compile time:
///
/// ```compile_fail
/// use rand::SeedableRng;
/// use repaint_core::approximator::Optimizer;
/// use repaint_core::ppo::{fit_critic, PpoConfig};
/// use repaint_core::rollout::{Teacher, TrajectoryBuffer};
/// use repaint_core::ValueNetwork;
///
/// let buffer: TrajectoryBuffer<Teacher> = TrajectoryBuffer::new();
/// let mut critic = ValueNetwork::new(2, &[4], 0);
/// let mut opt = Optimizer::sgd(0.1);
/// let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
/// fit_critic(&buffer, &mut critic, &mut opt, &PpoConfig::default(), &mut rng);
/// ```
///
/// ```
/// # use rand::SeedableRng;
/// # use repaint_core::approximator::Optimizer;
/// # use repaint_core::ppo::{fit_critic, PpoConfig};
/// # use repaint_core::rollout::{Student, TrajectoryBuffer};
/// # use repaint_core::ValueNetwork;
/// let buffer: TrajectoryBuffer<Student> = TrajectoryBuffer::new();
/// let mut critic = ValueNetwork::new(2, &[4], 0);
/// let mut opt = Optimizer::sgd(0.1);
/// let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
/// // Compiles, but an empty buffer without returns is a runtime error.
/// assert!(fit_critic(&buffer, &mut critic, &mut opt, &PpoConfig::default(), &mut rng).is_err());
/// ```
pub fn fit_critic<R: Rng>(
    buffer: &TrajectoryBuffer<Student>,
    critic: &mut ValueNetwork,
    optimizer: &mut Optimizer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let returns = buffer
        .returns()
        .ok_or_else(|| Error::contract("critic targets (returns) have not been computed"))?;
    if buffer.is_empty() {
        return Err(Error::contract("cannot fit the critic on an empty buffer"));
    }
    let ts = buffer.transitions();
    let mut trace = Vec::new();
    for _ in 0..cfg.epochs {
        for mb in minibatches(ts.len(), cfg.minibatch_size, rng) {
            let states: Vec<&[f64]> = mb.iter().map(|&i| ts[i].state.as_slice()).collect();
            let targets: Vec<f64> = mb.iter().map(|&i| returns[i]).collect();
            let (loss, grad) = critic_mse(critic, &states, &targets)?;
            trace.push(loss);
            optimizer.step(critic.params_mut(), &grad, Direction::Descend)?;
        }
    }
    Ok(trace)
}

/// Collects student experience for iteration `k` on its own random stream.
pub fn collect_student(
    actor: &PolicyNetwork,
    env: &mut EnvInstance,
    cfg: &PpoConfig,
    seed: u64,
    k: u64,
) -> Result<TrajectoryBuffer<Student>> {
    let mut rng = seeding::stream_rng(seed, streams::STUDENT_ROLLOUT, k);
    rollout::collect(actor, env, cfg.rollout_budget()?, &mut rng)
}

/// Critic step of an iteration: targets from the current critic, regression,
/// then advantages under the refitted critic. Returns the mean fit loss.
pub fn refit_critic_and_estimate(
    agent: &mut ActorCritic,
    buffer: &mut TrajectoryBuffer<Student>,
    cfg: &PpoConfig,
    seed: u64,
    k: u64,
) -> Result<f64> {
    rollout::compute_gae(buffer, &agent.critic, cfg.gae)?;
    let mut rng = seeding::stream_rng(seed, streams::CRITIC_MINIBATCH, k);
    let trace = fit_critic(buffer, &mut agent.critic, &mut agent.critic_opt, cfg, &mut rng)?;
    rollout::compute_gae(buffer, &agent.critic, cfg.gae)?;
    Ok(trace.iter().sum::<f64>() / trace.len().max(1) as f64)
}

/// Transfer terms mixed into an actor update.
pub struct TransferTerms<'a> {
    pub teachers: Vec<(&'a dyn Policy, f64)>,
    pub alpha_rep: f64,
    /// Selected teacher experience with advantages under the student task.
    pub instance: Option<&'a TrajectoryBuffer<Teacher>>,
    pub alpha_ins: f64,
}

impl TransferTerms<'_> {
    pub fn none() -> Self {
        Self {
            teachers: Vec::new(),
            alpha_rep: 1.0,
            instance: None,
            alpha_ins: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateStats {
    pub steps: usize,
    pub surrogate: f64,
    pub entropy: f64,
    pub cross_entropy: f64,
    pub instance: f64,
}

/// Runs `cfg.epochs` passes of minibatch gradient ascent on the actor.
///
/// With on-policy data, each epoch visits `ceil(T / minibatch)` student
/// minibatches and the selected teacher samples are spread over the same
/// number of steps. Without on-policy data the teacher samples are visited in
/// minibatches of the configured size. Student and teacher minibatches are
/// shuffled on separate streams.
pub fn update_actor(
    agent: &mut ActorCritic,
    student: Option<&TrajectoryBuffer<Student>>,
    terms: &TransferTerms<'_>,
    cfg: &PpoConfig,
    seed: u64,
    k: u64,
) -> Result<UpdateStats> {
    let student_samples: Vec<Sample<'_>> = match student {
        Some(buf) => {
            let adv = buf
                .advantages()
                .ok_or_else(|| Error::contract("student advantages have not been computed"))?;
            let adv = if cfg.normalize_advantages {
                rollout::normalize(adv)
            } else {
                adv.to_vec()
            };
            buf.transitions()
                .iter()
                .zip(adv)
                .map(|(transition, advantage)| Sample { transition, advantage })
                .collect()
        }
        None => Vec::new(),
    };
    let teacher_samples: Vec<Sample<'_>> = match terms.instance {
        Some(buf) if terms.alpha_ins != 0.0 && !buf.is_empty() => {
            let adv = buf
                .advantages()
                .ok_or_else(|| Error::contract("teacher advantages have not been computed"))?;
            buf.transitions()
                .iter()
                .zip(adv)
                .map(|(transition, &advantage)| Sample { transition, advantage })
                .collect()
        }
        _ => Vec::new(),
    };
    if student_samples.is_empty() && teacher_samples.is_empty() {
        return Ok(UpdateStats::default());
    }
    let n_steps = if student_samples.is_empty() {
        teacher_samples.len().div_ceil(cfg.minibatch_size)
    } else {
        student_samples.len().div_ceil(cfg.minibatch_size)
    };
    let teacher_chunk = teacher_samples.len().div_ceil(n_steps).max(1);
    let mut student_rng = seeding::stream_rng(seed, streams::STUDENT_MINIBATCH, k);
    let mut teacher_rng = seeding::stream_rng(seed, streams::TEACHER_MINIBATCH, k);
    let mut stats = UpdateStats::default();
    for _ in 0..cfg.epochs {
        let student_mbs = if student_samples.is_empty() {
            Vec::new()
        } else {
            minibatches(student_samples.len(), cfg.minibatch_size, &mut student_rng)
        };
        let teacher_mbs = if teacher_samples.is_empty() {
            Vec::new()
        } else {
            minibatches(teacher_samples.len(), teacher_chunk, &mut teacher_rng)
        };
        for j in 0..n_steps {
            let on: Vec<Sample<'_>> = student_mbs
                .get(j)
                .map(|mb| mb.iter().map(|&i| student_samples[i]).collect())
                .unwrap_or_default();
            let off: Vec<Sample<'_>> = teacher_mbs
                .get(j)
                .map(|mb| mb.iter().map(|&i| teacher_samples[i]).collect())
                .unwrap_or_default();
            if on.is_empty() && off.is_empty() {
                continue;
            }
            let objective = ActorObjective {
                clip: cfg.clip,
                on_policy: &on,
                on_policy_weight: terms.alpha_rep,
                entropy_coef: cfg.entropy_coef,
                teachers: &terms.teachers,
                off_policy: &off,
                off_policy_weight: terms.alpha_ins,
            };
            let (parts, grad) = objective.evaluate(&agent.actor)?;
            agent.actor_opt.step(agent.actor.params_mut(), &grad, Direction::Ascend)?;
            stats.steps += 1;
            stats.surrogate += parts.surrogate;
            stats.entropy += parts.entropy;
            stats.cross_entropy += parts.cross_entropy.iter().sum::<f64>();
            stats.instance += parts.instance;
        }
    }
    if stats.steps > 0 {
        let n = stats.steps as f64;
        stats.surrogate /= n;
        stats.entropy /= n;
        stats.cross_entropy /= n;
        stats.instance /= n;
    }
    Ok(stats)
}

/// Mean `KL(before || after)` over the states of `buffer`.
pub fn mean_kl(before: &PolicyNetwork, after: &PolicyNetwork, buffer: &TrajectoryBuffer<Student>) -> Result<f64> {
    if buffer.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for t in buffer.transitions() {
        total += before.forward(&t.state)?.kl_to(&after.forward(&t.state)?)?;
    }
    Ok(total / buffer.len() as f64)
}

/// What an iteration did to the actor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateKind {
    Ppo,
    Combined,
    Representation,
    Instance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationMetrics {
    pub iteration: u64,
    pub kind: UpdateKind,
    /// Mean undiscounted return of the episodes completed during collection.
    pub mean_return: Option<f64>,
    pub critic_loss: Option<f64>,
    pub surrogate: f64,
    pub entropy: f64,
    pub cross_entropy: f64,
    pub instance: f64,
    pub kl: f64,
    pub beta: f64,
    pub teacher_samples: usize,
    pub kept_samples: usize,
    /// Gradient diagnostic `F` at the start of the update, when both transfer
    /// terms were active.
    pub diagnostic: Option<f64>,
}

impl IterationMetrics {
    pub(crate) fn new(iteration: u64, kind: UpdateKind) -> Self {
        Self {
            iteration,
            kind,
            mean_return: None,
            critic_loss: None,
            surrogate: 0.0,
            entropy: 0.0,
            cross_entropy: 0.0,
            instance: 0.0,
            kl: 0.0,
            beta: 0.0,
            teacher_samples: 0,
            kept_samples: 0,
            diagnostic: None,
        }
    }

    pub(crate) fn absorb(&mut self, stats: &UpdateStats) {
        self.surrogate = stats.surrogate;
        self.entropy = stats.entropy;
        self.cross_entropy = stats.cross_entropy;
        self.instance = stats.instance;
    }
}

/// One Clipped-PPO iteration `k`: collect, fit the critic, estimate
/// advantages, then maximise the clipped surrogate plus entropy bonus.
/// Randomness is drawn from streams derived from `(seed, k)`.
pub fn ppo_iteration(
    agent: &mut ActorCritic,
    env: &mut EnvInstance,
    cfg: &PpoConfig,
    seed: u64,
    k: u64,
) -> Result<IterationMetrics> {
    let mut metrics = IterationMetrics::new(k, UpdateKind::Ppo);
    let mut buffer = collect_student(&agent.actor, env, cfg, seed, k)?;
    metrics.mean_return = buffer.mean_episode_return();
    metrics.critic_loss = Some(refit_critic_and_estimate(agent, &mut buffer, cfg, seed, k)?);
    let before = agent.actor.clone();
    let stats = update_actor(agent, Some(&buffer), &TransferTerms::none(), cfg, seed, k)?;
    metrics.absorb(&stats);
    metrics.kl = mean_kl(&before, &agent.actor, &buffer)?;
    Ok(metrics)
}
