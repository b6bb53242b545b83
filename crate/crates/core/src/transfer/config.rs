use serde::{Deserialize, Serialize};

use super::selection::SelectionRule;
use crate::error::{Error, Result};
use crate::rollout::{Budget, GaeConfig};

/// Geometric cross-entropy weight `beta_k = beta0 * decay^k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSchedule {
    pub beta0: f64,
    pub decay: f64,
}

impl BetaSchedule {
    pub fn new(beta0: f64, decay: f64) -> Result<Self> {
        let s = Self { beta0, decay };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(beta: f64) -> Self {
        Self { beta0: beta, decay: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta0 >= 0.0 && self.beta0.is_finite()) {
            return Err(Error::config("beta0 must be finite and non-negative"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::config("beta decay must lie in (0, 1]"));
        }
        Ok(())
    }

    pub fn beta(&self, k: u64) -> f64 {
        self.beta0 * self.decay.powi(k.min(i32::MAX as u64) as i32)
    }
}

/// Which slot an alternating schedule assigns to an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Representation,
    Instance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Schedule {
    /// Both transfer terms in every update.
    Combined,
    /// `rep_steps` representation-only iterations followed by `ins_steps`
    /// instance-only iterations, repeated.
    Alternating { rep_steps: u32, ins_steps: u32 },
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if let Schedule::Alternating { rep_steps, ins_steps } = self {
            if rep_steps + ins_steps == 0 {
                return Err(Error::config("alternating schedule needs at least one slot per period"));
            }
        }
        Ok(())
    }

    /// Slot of iteration `k` (1-based). `None` for the combined schedule.
    pub fn slot(&self, k: u64) -> Option<Slot> {
        match *self {
            Schedule::Combined => None,
            Schedule::Alternating { rep_steps, ins_steps } => {
                let period = u64::from(rep_steps) + u64::from(ins_steps);
                let pos = (k.max(1) - 1) % period;
                Some(if pos < u64::from(rep_steps) {
                    Slot::Representation
                } else {
                    Slot::Instance
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferConfig {
    /// One schedule per teacher, in teacher order.
    pub betas: Vec<BetaSchedule>,
    pub selection: SelectionRule,
    pub alpha_rep: f64,
    pub alpha_ins: f64,
    pub schedule: Schedule,
    /// Transfer is active for iterations `1..=repaint_iterations`; later
    /// iterations are plain PPO.
    pub repaint_iterations: u64,
    /// Experience gathered by each teacher per transfer iteration.
    pub teacher_budget: Budget,
    /// Advantage estimation on teacher samples; the student's settings when
    /// unset.
    pub teacher_gae: Option<GaeConfig>,
    /// Record the gradient diagnostic in iteration metrics.
    pub diagnostics: bool,
}

impl TransferConfig {
    pub fn new(betas: Vec<BetaSchedule>, selection: SelectionRule, teacher_budget: Budget) -> Self {
        Self {
            betas,
            selection,
            alpha_rep: 1.0,
            alpha_ins: 1.0,
            schedule: Schedule::Combined,
            repaint_iterations: u64::MAX,
            teacher_budget,
            teacher_gae: None,
            diagnostics: false,
        }
    }

    pub fn validate(&self, n_teachers: usize) -> Result<()> {
        if self.betas.len() != n_teachers {
            return Err(Error::config(format!(
                "{} beta schedules configured for {} teachers",
                self.betas.len(),
                n_teachers
            )));
        }
        for b in &self.betas {
            b.validate()?;
        }
        self.selection.validate()?;
        if !(self.alpha_rep >= 0.0 && self.alpha_ins >= 0.0 && self.alpha_rep.is_finite() && self.alpha_ins.is_finite())
        {
            return Err(Error::config("alpha_rep and alpha_ins must be finite and non-negative"));
        }
        self.schedule.validate()?;
        match self.teacher_budget {
            Budget::Steps(0) | Budget::Episodes(0) => {
                return Err(Error::config("teacher rollout budget must be positive"))
            }
            _ => {}
        }
        if let Some(g) = self.teacher_gae {
            g.validate()?;
        }
        Ok(())
    }

    pub fn is_active(&self, k: u64) -> bool {
        k <= self.repaint_iterations
    }

    pub fn betas_at(&self, k: u64) -> Vec<f64> {
        self.betas.iter().map(|b| b.beta(k)).collect()
    }
}
