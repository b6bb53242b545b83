use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::approximator::ActionSpace;
use crate::error::{check_dim, Error, Result};

/// Built-in environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnvId {
    GoalReacher { dims: usize, continuous: bool },
    LaneGrid,
    AvoidGrid,
}

impl EnvId {
    pub const ALL: [EnvId; 6] = [
        EnvId::GoalReacher { dims: 1, continuous: false },
        EnvId::GoalReacher { dims: 2, continuous: false },
        EnvId::GoalReacher { dims: 1, continuous: true },
        EnvId::GoalReacher { dims: 2, continuous: true },
        EnvId::LaneGrid,
        EnvId::AvoidGrid,
    ];

    pub fn feature_names(&self) -> &'static [&'static str] {
        match self {
            EnvId::GoalReacher { .. } => &["neg_goal_distance", "neg_action_magnitude", "goal_reached"],
            EnvId::LaneGrid => &["progress_delta", "inner_lane", "outer_lane", "off_track"],
            EnvId::AvoidGrid => &["progress_delta", "obstacle_proximity", "collision", "completion"],
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_names().len()
    }

    /// Upper bound on `|phi_i|` for each feature over one step.
    pub fn feature_bounds(&self) -> Vec<f64> {
        match *self {
            EnvId::GoalReacher { dims, .. } => {
                vec![super::reacher::max_distance(dims), 1.0, 1.0]
            }
            EnvId::LaneGrid | EnvId::AvoidGrid => vec![1.0; 4],
        }
    }

    pub fn observation_dim(&self) -> usize {
        match *self {
            EnvId::GoalReacher { dims, .. } => 2 * dims,
            EnvId::LaneGrid => super::lane::OBSERVATION_DIM,
            EnvId::AvoidGrid => super::avoid::OBSERVATION_DIM,
        }
    }

    pub fn action_space(&self) -> ActionSpace {
        match *self {
            EnvId::GoalReacher { dims, continuous: true } => ActionSpace::Continuous(dims),
            EnvId::GoalReacher { dims, continuous: false } => {
                ActionSpace::Discrete(super::reacher::discrete_action_count(dims))
            }
            EnvId::LaneGrid => ActionSpace::Discrete(super::lane::N_ACTIONS),
            EnvId::AvoidGrid => ActionSpace::Discrete(super::avoid::N_ACTIONS),
        }
    }

    pub fn default_horizon(&self) -> usize {
        match *self {
            EnvId::GoalReacher { dims: 1, .. } => 30,
            EnvId::GoalReacher { .. } => 40,
            EnvId::LaneGrid => 40,
            EnvId::AvoidGrid => 50,
        }
    }

    /// Human-readable documentation of the dynamics and feature map.
    pub fn describe(&self) -> String {
        let body = match *self {
            EnvId::GoalReacher { .. } => super::reacher::DESCRIPTION,
            EnvId::LaneGrid => super::lane::DESCRIPTION,
            EnvId::AvoidGrid => super::avoid::DESCRIPTION,
        };
        let mut out = format!("{self}\n  observation dim: {}\n  actions: ", self.observation_dim());
        match self.action_space() {
            ActionSpace::Discrete(n) => out.push_str(&format!("{n} discrete\n")),
            ActionSpace::Continuous(d) => out.push_str(&format!("continuous, dim {d}, clipped to [-1, 1]\n")),
        }
        out.push_str(&format!("  default horizon: {}\n", self.default_horizon()));
        out.push_str(body);
        out.push_str("  features (reward = features . weights / normalizer):\n");
        for (name, bound) in self.feature_names().iter().zip(self.feature_bounds()) {
            out.push_str(&format!("    {name:<22} |phi| <= {bound:.4}\n"));
        }
        out
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvId::GoalReacher { dims, continuous } => {
                write!(f, "goal-reacher-{dims}d")?;
                if *continuous {
                    write!(f, "-continuous")?;
                }
                Ok(())
            }
            EnvId::LaneGrid => write!(f, "lane-grid"),
            EnvId::AvoidGrid => write!(f, "avoid-grid"),
        }
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EnvId::ALL
            .iter()
            .find(|id| id.to_string() == s)
            .copied()
            .ok_or_else(|| Error::UnknownEnv(s.to_string()))
    }
}

impl Serialize for EnvId {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EnvId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A task: an environment plus the reward weights `w` in `r = phi . w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub env_id: EnvId,
    pub feature_weights: Vec<f64>,
    pub gamma: f64,
    pub episode_horizon: usize,
    pub reward_normalizer: Option<f64>,
}

impl TaskSpec {
    /// Task with default discount (0.99), horizon and reward normalisation.
    pub fn new(env_id: EnvId, feature_weights: Vec<f64>) -> Result<Self> {
        let reward_normalizer = auto_normalizer(env_id, &feature_weights)?;
        let spec = Self {
            env_id,
            feature_weights,
            gamma: 0.99,
            episode_horizon: env_id.default_horizon(),
            reward_normalizer,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_horizon(mut self, horizon: usize) -> Self {
        self.episode_horizon = horizon;
        self
    }

    pub fn without_normalization(mut self) -> Self {
        self.reward_normalizer = None;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_dim("feature weights", self.env_id.feature_dim(), self.feature_weights.len())?;
        if self.feature_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("feature weights"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::contract(format!("discount {} outside [0, 1]", self.gamma)));
        }
        if self.episode_horizon == 0 {
            return Err(Error::contract("episode horizon must be at least 1"));
        }
        if let Some(n) = self.reward_normalizer {
            if !(n > 0.0 && n.is_finite()) {
                return Err(Error::contract("reward normaliser must be positive"));
            }
        }
        Ok(())
    }

    pub fn reward(&self, features: &[f64]) -> f64 {
        let raw: f64 = features.iter().zip(&self.feature_weights).map(|(p, w)| p * w).sum();
        match self.reward_normalizer {
            Some(n) => raw / n,
            None => raw,
        }
    }
}

/// `sum_i |w_i| * bound_i`, so every one-step reward lies in `[-1, 1]`.
/// `None` for an all-zero weight vector.
pub fn auto_normalizer(env_id: EnvId, weights: &[f64]) -> Result<Option<f64>> {
    check_dim("feature weights", env_id.feature_dim(), weights.len())?;
    let n: f64 = weights
        .iter()
        .zip(env_id.feature_bounds())
        .map(|(w, b)| w.abs() * b)
        .sum();
    Ok((n > 0.0).then_some(n))
}

/// Cosine of the angle between two reward weight vectors.
pub fn cosine_similarity(w1: &[f64], w2: &[f64]) -> Result<f64> {
    check_dim("similarity weights", w1.len(), w2.len())?;
    let n1 = w1.iter().map(|x| x * x).sum::<f64>().sqrt();
    let n2 = w2.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n1 == 0.0 || n2 == 0.0 {
        return Err(Error::contract("cosine similarity of a zero vector"));
    }
    let dot: f64 = w1.iter().zip(w2).map(|(a, b)| a * b).sum();
    Ok((dot / (n1 * n2)).clamp(-1.0, 1.0))
}

/// Teacher and student tasks on the same environment.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskPair {
    pub teacher: TaskSpec,
    pub student: TaskSpec,
    pub similarity: f64,
    /// The teacher ignores (zero weight) at least one feature the student
    /// rewards.
    pub teacher_is_subtask: bool,
}

impl TaskPair {
    /// Similar in the cosine sense: strictly positive similarity.
    pub fn is_similar(&self) -> bool {
        self.similarity > 0.0
    }
}

pub fn make_task_pair(env_id: EnvId, teacher_weights: Vec<f64>, student_weights: Vec<f64>) -> Result<TaskPair> {
    let teacher = TaskSpec::new(env_id, teacher_weights)?;
    let student = TaskSpec::new(env_id, student_weights)?;
    let similarity = cosine_similarity(&teacher.feature_weights, &student.feature_weights)?;
    let teacher_is_subtask = teacher
        .feature_weights
        .iter()
        .zip(&student.feature_weights)
        .any(|(t, s)| *t == 0.0 && *s != 0.0);
    Ok(TaskPair {
        teacher,
        student,
        similarity,
        teacher_is_subtask,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_ids_round_trip_through_strings() {
        for id in EnvId::ALL {
            assert_eq!(id.to_string().parse::<EnvId>().unwrap(), id);
        }
        assert!("mujoco-ant".parse::<EnvId>().is_err());
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(cosine_similarity(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let s = cosine_similarity(&[1.0, -1.0], &[1.0, -3.0]).unwrap();
        assert!((s - 4.0 / 20f64.sqrt()).abs() < 1e-12);
        assert!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(cosine_similarity(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn task_pairs() {
        let reacher = EnvId::GoalReacher { dims: 1, continuous: false };
        let same = make_task_pair(reacher, vec![1.0, -1.0, 1.0], vec![1.0, -1.0, 1.0]).unwrap();
        assert!((same.similarity - 1.0).abs() < 1e-15);
        assert!(!same.teacher_is_subtask);

        let similar = make_task_pair(reacher, vec![1.0, -3.0, 1.0], vec![1.0, -1.0, 1.0]).unwrap();
        assert!(similar.is_similar());
        assert!((similar.similarity - 5.0 / 33f64.sqrt()).abs() < 1e-12);

        let sub = make_task_pair(EnvId::AvoidGrid, vec![1.0, 0.0, 0.0, 1.0], vec![1.0, -0.5, -1.0, 1.0]).unwrap();
        assert!(sub.teacher_is_subtask);

        assert!(make_task_pair(reacher, vec![1.0, 0.0], vec![1.0, -1.0, 1.0]).is_err());
    }

    #[test]
    fn spec_validation() {
        let reacher = EnvId::GoalReacher { dims: 1, continuous: false };
        let spec = TaskSpec::new(reacher, vec![1.0, -1.0, 1.0]).unwrap();
        assert!(spec.clone().with_gamma(1.5).validate().is_err());
        assert!(spec.with_horizon(0).validate().is_err());
        assert!(TaskSpec::new(reacher, vec![1.0]).is_err());
        assert_eq!(TaskSpec::new(reacher, vec![0.0; 3]).unwrap().reward_normalizer, None);
    }
}
