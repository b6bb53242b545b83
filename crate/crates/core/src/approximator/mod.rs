//! Small fully connected policy, value and Q networks with exact
//! reverse-mode gradients, plus SGD/Adam and JSON checkpoints.

mod checkpoint;
mod distribution;
mod mlp;
mod network;
mod optimizer;
mod params;

pub use checkpoint::{load_policy, save_policy, Checkpoint, NetworkDescriptor, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use distribution::{Action, ActionDistribution, ActionSpace, DistGrad};
pub use mlp::{Activation, Architecture, Mlp, MlpCache};
pub use network::{
    PolicyCache, PolicyHead, PolicyNetwork, QCache, QNetwork, ValueCache, ValueNetwork, LOG_STD_MAX, LOG_STD_MIN,
};
pub use optimizer::{Direction, Optimizer, OptimizerKind};
pub use params::{Layout, ParamVector, Segment};
