use crate::approximator::PolicyNetwork;
use crate::error::{Error, Result};
use crate::ppo::{ActorObjective, Sample};
use crate::rollout::Policy;

/// Mean cross-entropy `H(pi_teacher || pi_theta)` over `states` and its
/// gradient with respect to the actor parameters.
pub fn aux_cross_entropy(
    teacher: &dyn Policy,
    actor: &PolicyNetwork,
    states: &[&[f64]],
) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; actor.n_params()];
    if states.is_empty() {
        return Ok((0.0, grad));
    }
    let n = states.len() as f64;
    let mut value = 0.0;
    for s in states {
        let (dist, cache) = actor.forward_cached(s)?;
        let target = teacher.action_distribution(s)?;
        value += dist.cross_entropy_from(&target)? / n;
        actor.backward(&cache, &dist.grad_cross_entropy_from(&target)?.scaled(1.0 / n), &mut grad);
    }
    if !value.is_finite() {
        return Err(Error::NonFinite("cross-entropy"));
    }
    Ok((value, grad))
}

/// `L_clip - sum_i beta_i * H(pi_teacher_i || pi_theta)` on a student batch,
/// with its gradient.
pub fn representation_objective(
    actor: &PolicyNetwork,
    samples: &[Sample<'_>],
    teachers: &[(&dyn Policy, f64)],
    clip: f64,
) -> Result<(f64, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::contract("representation objective needs a non-empty batch"));
    }
    let objective = ActorObjective {
        clip,
        on_policy: samples,
        on_policy_weight: 1.0,
        entropy_coef: 0.0,
        teachers,
        off_policy: &[],
        off_policy_weight: 0.0,
    };
    let (parts, grad) = objective.evaluate(actor)?;
    Ok((parts.total, grad))
}

/// Mean `min(rho * A', clip(rho) * A')` with `rho = pi_theta / pi_teacher`,
/// using the behaviour log-probabilities recorded by the teacher. Zero (with
/// a zero gradient) on an empty batch.
pub fn instance_objective(actor: &PolicyNetwork, samples: &[Sample<'_>], clip: f64) -> Result<(f64, Vec<f64>)> {
    let objective = ActorObjective {
        clip,
        on_policy: &[],
        on_policy_weight: 0.0,
        entropy_coef: 0.0,
        teachers: &[],
        off_policy: samples,
        off_policy_weight: 1.0,
    };
    let (parts, grad) = objective.evaluate(actor)?;
    Ok((parts.instance, grad))
}
