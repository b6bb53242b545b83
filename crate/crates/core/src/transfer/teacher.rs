use crate::approximator::{Action, ActionDistribution, ActionSpace, PolicyNetwork};
use crate::error::{Error, Result};
use crate::rollout::Policy;

/// Default lower bound on teacher action probabilities used as importance
/// ratio denominators.
pub const DEFAULT_TEACHER_FLOOR: f64 = 1e-6;

/// A frozen, previously trained policy.
///
/// Recorded behaviour log-probabilities are floored at `ln(floor)`, so the
/// instance-transfer ratio `pi_theta / pi_teacher` stays finite.
#[derive(Debug, Clone)]
pub struct TeacherPolicy {
    id: String,
    network: PolicyNetwork,
    floor: f64,
}

impl TeacherPolicy {
    pub fn new(id: impl Into<String>, network: PolicyNetwork) -> Self {
        Self {
            id: id.into(),
            network,
            floor: DEFAULT_TEACHER_FLOOR,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && floor < 1.0) {
            return Err(Error::config("teacher probability floor must lie in (0, 1)"));
        }
        self.floor = floor;
        Ok(self)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn network(&self) -> &PolicyNetwork {
        &self.network
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// `max(log pi_teacher(a | s), ln floor)`.
    pub fn floored_log_prob(&self, state: &[f64], action: &Action) -> Result<f64> {
        let dist = self.network.forward(state)?;
        self.behavior_log_prob(&dist, action)
    }
}

impl Policy for TeacherPolicy {
    fn action_space(&self) -> ActionSpace {
        self.network.action_space()
    }

    fn observation_dim(&self) -> usize {
        self.network.observation_dim()
    }

    fn action_distribution(&self, state: &[f64]) -> Result<ActionDistribution> {
        self.network.forward(state)
    }

    fn behavior_log_prob(&self, dist: &ActionDistribution, action: &Action) -> Result<f64> {
        Ok(dist.log_prob(action)?.max(self.floor.ln()))
    }
}
