use super::config::{Schedule, Slot, TransferConfig};
use super::diagnostic::actor_gradient_diagnostic;
use super::selection::select_experiences;
use super::teacher::TeacherPolicy;
use crate::envs::EnvInstance;
use crate::error::{Error, Result};
use crate::ppo::{
    collect_student, mean_kl, ppo_iteration, refit_critic_and_estimate, update_actor, ActorCritic, IterationMetrics,
    PpoConfig, Sample, TransferTerms, UpdateKind,
};
use crate::rollout::{self, Policy, Teacher, TrajectoryBuffer};
use crate::seeding::{self, streams};

/// Runs every teacher on the student task (rewards come from `env`'s spec)
/// and concatenates the experience in teacher order.
pub fn collect_teachers(
    teachers: &[TeacherPolicy],
    env: &mut EnvInstance,
    cfg: &TransferConfig,
    seed: u64,
    k: u64,
) -> Result<TrajectoryBuffer<Teacher>> {
    let mut all = TrajectoryBuffer::new();
    for (i, teacher) in teachers.iter().enumerate() {
        let mut rng = seeding::stream_rng(seeding::derive_seed(seed, streams::TEACHER_ROLLOUT, i as u64), streams::TEACHER_ROLLOUT, k);
        let part: TrajectoryBuffer<Teacher> = rollout::collect(teacher, env, cfg.teacher_budget, &mut rng)?;
        all.append(part);
    }
    Ok(all)
}

/// Teacher advantages under the student critic, followed by selection.
/// Returns the selected buffer and the size of the unfiltered one.
fn estimate_and_select(
    agent: &ActorCritic,
    mut teacher_buf: TrajectoryBuffer<Teacher>,
    ppo: &PpoConfig,
    cfg: &TransferConfig,
    seed: u64,
    k: u64,
) -> Result<(TrajectoryBuffer<Teacher>, usize)> {
    let total = teacher_buf.len();
    if total == 0 {
        return Ok((teacher_buf, 0));
    }
    rollout::compute_gae(&mut teacher_buf, &agent.critic, cfg.teacher_gae.unwrap_or(ppo.gae))?;
    let mut rng = seeding::stream_rng(seed, streams::SELECTION, k);
    let (kept, _) = select_experiences(&teacher_buf, cfg.selection, &mut rng)?;
    Ok((kept, total))
}

fn weighted_teachers<'a>(teachers: &'a [TeacherPolicy], cfg: &TransferConfig, k: u64) -> Vec<(&'a dyn Policy, f64)> {
    teachers
        .iter()
        .zip(cfg.betas_at(k))
        .map(|(t, b)| (t as &dyn Policy, b))
        .collect()
}

fn samples<S: rollout::BufferSource>(buf: &TrajectoryBuffer<S>) -> Vec<Sample<'_>> {
    let adv = buf.advantages().unwrap_or(&[]);
    buf.transitions()
        .iter()
        .zip(adv)
        .map(|(transition, &advantage)| Sample { transition, advantage })
        .collect()
}

fn check_teachers(agent: &ActorCritic, teachers: &[TeacherPolicy], cfg: &TransferConfig) -> Result<()> {
    cfg.validate(teachers.len())?;
    for t in teachers {
        if t.network().action_space() != agent.actor.action_space()
            || t.network().observation_dim() != agent.actor.observation_dim()
        {
            return Err(Error::contract(format!("teacher {:?} does not fit the student's spaces", t.id())));
        }
    }
    Ok(())
}

/// One iteration of the combined update: student and teacher experience,
/// critic fit on student data, selection of teacher samples by their
/// student-task advantage, then `epochs` of ascent on
/// `alpha_rep * L_rep + alpha_ins * L_ins`. After the transfer phase this is
/// exactly [`ppo_iteration`].
pub fn repaint_iteration(
    agent: &mut ActorCritic,
    env: &mut EnvInstance,
    teachers: &[TeacherPolicy],
    ppo: &PpoConfig,
    cfg: &TransferConfig,
    seed: u64,
    k: u64,
) -> Result<IterationMetrics> {
    if k == 0 {
        return Err(Error::contract("iterations are numbered from 1"));
    }
    if !cfg.is_active(k) {
        return ppo_iteration(agent, env, ppo, seed, k);
    }
    check_teachers(agent, teachers, cfg)?;
    let mut metrics = IterationMetrics::new(k, UpdateKind::Combined);
    let mut student = collect_student(&agent.actor, env, ppo, seed, k)?;
    metrics.mean_return = student.mean_episode_return();
    let teacher_buf = collect_teachers(teachers, env, cfg, seed, k)?;
    metrics.critic_loss = Some(refit_critic_and_estimate(agent, &mut student, ppo, seed, k)?);
    let (kept, total) = estimate_and_select(agent, teacher_buf, ppo, cfg, seed, k)?;
    metrics.teacher_samples = total;
    metrics.kept_samples = kept.len();
    let weighted = weighted_teachers(teachers, cfg, k);
    metrics.beta = weighted.iter().map(|(_, b)| b).sum();
    if cfg.diagnostics {
        let on = normalized_samples(&student, ppo);
        let d = actor_gradient_diagnostic(&agent.actor, &on, &weighted, &samples(&kept), ppo.clip, 1.0)?;
        metrics.diagnostic = Some(d.value);
    }
    let terms = TransferTerms {
        teachers: weighted,
        alpha_rep: cfg.alpha_rep,
        instance: Some(&kept),
        alpha_ins: cfg.alpha_ins,
    };
    let before = agent.actor.clone();
    let stats = update_actor(agent, Some(&student), &terms, ppo, seed, k)?;
    metrics.absorb(&stats);
    metrics.kl = mean_kl(&before, &agent.actor, &student)?;
    Ok(metrics)
}

fn normalized_samples<'a>(buf: &'a TrajectoryBuffer<rollout::Student>, ppo: &PpoConfig) -> Vec<Sample<'a>> {
    let adv = buf.advantages().unwrap_or(&[]);
    let adv = if ppo.normalize_advantages {
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

/// One iteration of the alternating variant. Representation slots collect
/// student experience, fit the critic and ascend `alpha_rep * L_rep`.
/// Instance slots collect teacher experience, select it with the current
/// critic and ascend `alpha_ins * L_ins`; the critic is not touched.
pub fn alternating_repaint_iteration(
    agent: &mut ActorCritic,
    env: &mut EnvInstance,
    teachers: &[TeacherPolicy],
    ppo: &PpoConfig,
    cfg: &TransferConfig,
    seed: u64,
    k: u64,
) -> Result<IterationMetrics> {
    if k == 0 {
        return Err(Error::contract("iterations are numbered from 1"));
    }
    let slot = match cfg.schedule {
        Schedule::Combined => return Err(Error::config("alternating iteration requires an alternating schedule")),
        s => s.slot(k).expect("alternating schedules assign a slot"),
    };
    if !cfg.is_active(k) {
        return ppo_iteration(agent, env, ppo, seed, k);
    }
    check_teachers(agent, teachers, cfg)?;
    match slot {
        Slot::Representation => {
            let mut metrics = IterationMetrics::new(k, UpdateKind::Representation);
            let mut student = collect_student(&agent.actor, env, ppo, seed, k)?;
            metrics.mean_return = student.mean_episode_return();
            metrics.critic_loss = Some(refit_critic_and_estimate(agent, &mut student, ppo, seed, k)?);
            let weighted = weighted_teachers(teachers, cfg, k);
            metrics.beta = weighted.iter().map(|(_, b)| b).sum();
            let terms = TransferTerms {
                teachers: weighted,
                alpha_rep: cfg.alpha_rep,
                instance: None,
                alpha_ins: 0.0,
            };
            let before = agent.actor.clone();
            let stats = update_actor(agent, Some(&student), &terms, ppo, seed, k)?;
            metrics.absorb(&stats);
            metrics.kl = mean_kl(&before, &agent.actor, &student)?;
            Ok(metrics)
        }
        Slot::Instance => {
            let mut metrics = IterationMetrics::new(k, UpdateKind::Instance);
            let teacher_buf = collect_teachers(teachers, env, cfg, seed, k)?;
            let (kept, total) = estimate_and_select(agent, teacher_buf, ppo, cfg, seed, k)?;
            metrics.teacher_samples = total;
            metrics.kept_samples = kept.len();
            let terms = TransferTerms {
                teachers: Vec::new(),
                alpha_rep: 0.0,
                instance: Some(&kept),
                alpha_ins: cfg.alpha_ins,
            };
            let stats = update_actor(agent, None, &terms, ppo, seed, k)?;
            metrics.absorb(&stats);
            Ok(metrics)
        }
    }
}

/// Dispatches on the configured schedule.
pub fn transfer_iteration(
    agent: &mut ActorCritic,
    env: &mut EnvInstance,
    teachers: &[TeacherPolicy],
    ppo: &PpoConfig,
    cfg: &TransferConfig,
    seed: u64,
    k: u64,
) -> Result<IterationMetrics> {
    match cfg.schedule {
        Schedule::Combined => repaint_iteration(agent, env, teachers, ppo, cfg, seed, k),
        Schedule::Alternating { .. } => alternating_repaint_iteration(agent, env, teachers, ppo, cfg, seed, k),
    }
}
