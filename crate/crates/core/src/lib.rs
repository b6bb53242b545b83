//! Transfer reinforcement learning on top of a clipped-PPO actor-critic,
//! with small environments whose tasks differ only in their reward weights.

pub mod approximator;
pub mod envs;
pub mod error;
pub mod harness;
pub mod ppo;
pub mod rollout;
pub mod seeding;
pub mod transfer;

pub use approximator::{Action, ActionDistribution, ActionSpace, PolicyNetwork, QNetwork, ValueNetwork};
pub use envs::{cosine_similarity, EnvId, EnvInstance, TaskPair, TaskSpec};
pub use error::{Error, Result};
pub use ppo::{ActorCritic, PpoConfig};
pub use rollout::{Budget, TrajectoryBuffer, Transition};
pub use transfer::{SelectionRule, TeacherPolicy, TransferConfig};
