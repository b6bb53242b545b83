//! Transfer from frozen teacher policies: a distillation term on student
//! rollouts, off-policy updates on advantage-filtered teacher rollouts, and
//! the schedules that combine them.

mod config;
mod diagnostic;
mod iteration;
mod objectives;
mod presets;
mod qlearn;
mod selection;
mod teacher;

pub use config::{BetaSchedule, Schedule, Slot, TransferConfig};
pub use diagnostic::{actor_gradient_diagnostic, gradient_diagnostic, GradientDiagnostic};
pub use iteration::{alternating_repaint_iteration, collect_teachers, repaint_iteration, transfer_iteration};
pub use objectives::{aux_cross_entropy, instance_objective, representation_objective};
pub use presets::{preset, Preset, PRESET_NAMES};
pub use qlearn::{epsilon_greedy_action, q_target, q_transfer_update, QTransferConfig, QTransition, QUpdateStats};
pub use selection::{select_experiences, selected_indices, SelectionRule, PRIORITY_OFFSET};
pub use teacher::{TeacherPolicy, DEFAULT_TEACHER_FLOOR};
