use crate::approximator::{DistGrad, PolicyNetwork};
use crate::error::{Error, Result};
use crate::rollout::{Policy, Transition};

/// One transition paired with the advantage it is trained on.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    pub transition: &'a Transition,
    pub advantage: f64,
}

/// `clip_eps(ratio)`: `ratio` truncated to `[1 - eps, 1 + eps]`.
pub fn clip_ratio(ratio: f64, eps: f64) -> f64 {
    ratio.clamp(1.0 - eps, 1.0 + eps)
}

/// Per-sample clipped surrogate `min(r * A, clip_eps(r) * A)`.
pub fn clipped_term(ratio: f64, advantage: f64, eps: f64) -> f64 {
    (ratio * advantage).min(clip_ratio(ratio, eps) * advantage)
}

/// Derivative of [`clipped_term`] with respect to `log pi_theta`: `r * A`
/// where the unclipped branch is active, zero where the clip is binding.
pub fn clipped_term_log_grad(ratio: f64, advantage: f64, eps: f64) -> f64 {
    if ratio * advantage <= clip_ratio(ratio, eps) * advantage {
        ratio * advantage
    } else {
        0.0
    }
}

/// `pi_theta(a | s) / pi_b(a | s)` using the behaviour log-probability
/// recorded at collection time.
pub fn likelihood_ratio(actor: &PolicyNetwork, transition: &Transition) -> Result<f64> {
    let log_prob = actor.forward(&transition.state)?.log_prob(&transition.action)?;
    let ratio = (log_prob - transition.log_prob_behavior).exp();
    if !ratio.is_finite() {
        return Err(Error::NonFinite("likelihood ratio"));
    }
    Ok(ratio)
}

/// Mean clipped surrogate over `samples`. Ratios are always taken against
/// each transition's recorded behaviour log-probability: the rollout policy
/// for on-policy data, the teacher for instance transfer.
pub fn clipped_surrogate(actor: &PolicyNetwork, samples: &[Sample<'_>], eps: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::contract("clipped surrogate of an empty batch"));
    }
    let mut total = 0.0;
    for s in samples {
        let ratio = likelihood_ratio(actor, s.transition)?;
        total += clipped_term(ratio, s.advantage, eps);
    }
    Ok(total / samples.len() as f64)
}

/// Weighted sum of the terms an actor update maximises:
///
/// `on_policy_weight * (L_clip(on_policy) + entropy_coef * H - sum_i beta_i * CE_i)
///  + off_policy_weight * L_clip(off_policy)`
///
/// Each term is a mean over its own batch; empty batches and zero weights
/// contribute nothing (and are skipped entirely).
pub struct ActorObjective<'a> {
    pub clip: f64,
    pub on_policy: &'a [Sample<'a>],
    pub on_policy_weight: f64,
    pub entropy_coef: f64,
    /// Cross-entropy `H(teacher || pi_theta)` on the on-policy states, with
    /// weight `beta`.
    pub teachers: &'a [(&'a dyn Policy, f64)],
    pub off_policy: &'a [Sample<'a>],
    pub off_policy_weight: f64,
}

/// Values of the individual terms (unweighted batch means).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectiveParts {
    pub total: f64,
    pub surrogate: f64,
    pub entropy: f64,
    pub cross_entropy: Vec<f64>,
    pub instance: f64,
}

impl<'a> ActorObjective<'a> {
    /// Plain on-policy surrogate with an entropy bonus.
    pub fn ppo(samples: &'a [Sample<'a>], clip: f64, entropy_coef: f64) -> Self {
        Self {
            clip,
            on_policy: samples,
            on_policy_weight: 1.0,
            entropy_coef,
            teachers: &[],
            off_policy: &[],
            off_policy_weight: 0.0,
        }
    }

    /// Objective value and its exact gradient with respect to the actor
    /// parameters.
    pub fn evaluate(&self, actor: &PolicyNetwork) -> Result<(ObjectiveParts, Vec<f64>)> {
        let mut grad = vec![0.0; actor.n_params()];
        let mut parts = ObjectiveParts {
            cross_entropy: vec![0.0; self.teachers.len()],
            ..Default::default()
        };
        let on_active = !self.on_policy.is_empty() && self.on_policy_weight != 0.0;
        if on_active {
            let n = self.on_policy.len() as f64;
            let w = self.on_policy_weight / n;
            for s in self.on_policy {
                let t = s.transition;
                let (dist, cache) = actor.forward_cached(&t.state)?;
                let log_prob = dist.log_prob(&t.action)?;
                let ratio = (log_prob - t.log_prob_behavior).exp();
                if !ratio.is_finite() {
                    return Err(Error::NonFinite("likelihood ratio"));
                }
                parts.surrogate += clipped_term(ratio, s.advantage, self.clip) / n;
                let coeff = clipped_term_log_grad(ratio, s.advantage, self.clip);
                let mut d = dist.grad_log_prob(&t.action)?.scaled(coeff);
                if self.entropy_coef != 0.0 {
                    parts.entropy += dist.entropy() / n;
                    d.add_scaled(self.entropy_coef, &dist.grad_entropy());
                }
                for (i, (teacher, beta)) in self.teachers.iter().enumerate() {
                    if *beta == 0.0 {
                        continue;
                    }
                    let target = teacher.action_distribution(&t.state)?;
                    parts.cross_entropy[i] += dist.cross_entropy_from(&target)? / n;
                    d.add_scaled(-beta, &dist.grad_cross_entropy_from(&target)?);
                }
                actor.backward(&cache, &d.scaled(w), &mut grad);
            }
            let distill: f64 = self
                .teachers
                .iter()
                .zip(&parts.cross_entropy)
                .map(|((_, beta), ce)| beta * ce)
                .sum();
            parts.total += self.on_policy_weight * (parts.surrogate + self.entropy_coef * parts.entropy - distill);
        }
        if !self.off_policy.is_empty() && self.off_policy_weight != 0.0 {
            let n = self.off_policy.len() as f64;
            let w = self.off_policy_weight / n;
            for s in self.off_policy {
                let t = s.transition;
                let (dist, cache) = actor.forward_cached(&t.state)?;
                let ratio = (dist.log_prob(&t.action)? - t.log_prob_behavior).exp();
                if !ratio.is_finite() {
                    return Err(Error::NonFinite("importance ratio"));
                }
                parts.instance += clipped_term(ratio, s.advantage, self.clip) / n;
                let coeff = clipped_term_log_grad(ratio, s.advantage, self.clip);
                let d: DistGrad = dist.grad_log_prob(&t.action)?.scaled(coeff * w);
                actor.backward(&cache, &d, &mut grad);
            }
            parts.total += self.off_policy_weight * parts.instance;
        }
        if !parts.total.is_finite() {
            return Err(Error::NonFinite("actor objective"));
        }
        Ok((parts, grad))
    }
}

/// Mean entropy of the actor over `states` and its gradient.
pub fn mean_entropy(actor: &PolicyNetwork, states: &[&[f64]]) -> Result<(f64, Vec<f64>)> {
    let mut grad = vec![0.0; actor.n_params()];
    let mut value = 0.0;
    let n = states.len().max(1) as f64;
    for s in states {
        let (dist, cache) = actor.forward_cached(s)?;
        value += dist.entropy() / n;
        actor.backward(&cache, &dist.grad_entropy().scaled(1.0 / n), &mut grad);
    }
    Ok((value, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_arithmetic() {
        assert_eq!(clipped_term(1.5, 1.0, 0.2), 1.2);
        assert_eq!(clipped_term(0.5, -1.0, 0.2), -0.8);
        assert_eq!(clipped_term(2.0, 0.5, 0.2), 0.6);
        assert_eq!(clipped_term(1.0, -3.0, 0.2), -3.0);
    }

    #[test]
    fn clip_gradient_is_zero_only_when_binding() {
        assert_eq!(clipped_term_log_grad(1.5, 1.0, 0.2), 0.0);
        assert_eq!(clipped_term_log_grad(1.5, -1.0, 0.2), -1.5);
        assert_eq!(clipped_term_log_grad(0.5, -1.0, 0.2), 0.0);
        assert_eq!(clipped_term_log_grad(0.5, 1.0, 0.2), 0.5);
        assert_eq!(clipped_term_log_grad(1.1, 2.0, 0.2), 2.2);
    }
}
