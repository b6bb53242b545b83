use serde::{Deserialize, Serialize};

use super::objectives::{instance_objective, representation_objective};
use crate::approximator::PolicyNetwork;
use crate::error::{check_dim, Result};
use crate::ppo::Sample;
use crate::rollout::Policy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientDiagnostic {
    /// `|g_rep|^2 + a |g_ins|^2 + (1 + a) g_rep . g_ins`
    pub value: f64,
    pub rep_norm_sq: f64,
    pub ins_norm_sq: f64,
    pub inner: f64,
}

pub fn gradient_diagnostic(grad_rep: &[f64], grad_ins: &[f64], a: f64) -> Result<GradientDiagnostic> {
    check_dim("instance gradient", grad_rep.len(), grad_ins.len())?;
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
    let rep_norm_sq = dot(grad_rep, grad_rep);
    let ins_norm_sq = dot(grad_ins, grad_ins);
    let inner = dot(grad_rep, grad_ins);
    Ok(GradientDiagnostic {
        value: rep_norm_sq + a * ins_norm_sq + (1.0 + a) * inner,
        rep_norm_sq,
        ins_norm_sq,
        inner,
    })
}

/// The diagnostic at the current actor, with `g_rep` from the representation
/// objective on the student batch and `g_ins` from the instance objective on
/// the selected teacher batch.
pub fn actor_gradient_diagnostic(
    actor: &PolicyNetwork,
    student: &[Sample<'_>],
    teachers: &[(&dyn Policy, f64)],
    teacher_samples: &[Sample<'_>],
    clip: f64,
    a: f64,
) -> Result<GradientDiagnostic> {
    let (_, g_rep) = representation_objective(actor, student, teachers, clip)?;
    let (_, g_ins) = instance_objective(actor, teacher_samples, clip)?;
    gradient_diagnostic(&g_rep, &g_ins, a)
}
