//! Experience collection and advantage estimation.

mod buffer;
mod collect;
mod gae;

pub use buffer::{BufferSource, Source, Student, Teacher, TrajectoryBuffer, Transition};
pub use collect::{collect, collect_parallel, Budget, Policy};
pub use gae::{advantage_stats, compute_gae, gae_from_values, normalize, AdvantageStats, GaeConfig};
