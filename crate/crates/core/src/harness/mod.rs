//! Config-driven experiments: training runs per arm and seed, evaluation
//! curves written as CSV, and iterations-to-target reports.

mod config;
mod report;
mod run;

pub use config::{Arm, EvalMode, ExperimentConfig, TeacherSetup};
pub use report::{
    compute_report, iterations_to_target, mean_curve, percent_reduction, ArmReport, ExperimentReport,
    IterationsToTarget, SeedCurve, TargetScore, NOT_ACHIEVED,
};
pub use run::{
    compare_selection_rules, evaluate_policy, load_run_dir, load_teachers, read_records_csv, run_experiment,
    run_seed, seed_csv_path, train_teacher, EvalRecord, RuleRun, SeedRun, TeacherRun, CSV_HEADER,
};
