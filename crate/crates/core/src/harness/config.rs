use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::envs::{EnvId, TaskSpec};
use crate::error::{Error, Result};
use crate::ppo::PpoConfig;
use crate::rollout::{Budget, GaeConfig};
use crate::transfer::{BetaSchedule, Schedule, SelectionRule, TransferConfig};

/// An experimental condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    /// PPO from scratch.
    Baseline,
    /// Distillation term only.
    Ks,
    /// Filtered teacher experience only.
    It,
    /// Both transfer terms.
    Repaint,
}

impl Arm {
    pub const ALL: [Arm; 4] = [Arm::Baseline, Arm::Ks, Arm::It, Arm::Repaint];

    pub fn name(&self) -> &'static str {
        match self {
            Arm::Baseline => "baseline",
            Arm::Ks => "ks",
            Arm::It => "it",
            Arm::Repaint => "repaint",
        }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::config(format!("unknown arm {s:?}; expected baseline, ks, it or repaint")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    /// Sample actions, as during training.
    Stochastic,
    /// Take the most likely action.
    Mode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeacherSetup {
    /// Task the teacher is (or was) trained on; only needed to train it.
    pub task: Option<TaskSpec>,
    pub checkpoints: Vec<PathBuf>,
    /// Training iterations used by `train-teacher`.
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub arm: Arm,
    pub student: TaskSpec,
    pub teacher: Option<TeacherSetup>,
    pub ppo: PpoConfig,
    pub transfer: TransferConfig,
    pub iterations: usize,
    pub eval_episodes: usize,
    pub eval_mode: EvalMode,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Initialise the student actor from the first teacher.
    pub warm_start: bool,
    /// Write measured wall-clock times; otherwise the column is 0 and output
    /// files are byte-reproducible.
    pub record_wall_ms: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    env: Option<EnvId>,
    weights: Option<Vec<f64>>,
    horizon: Option<usize>,
    #[serde(default = "yes")]
    normalize: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TeacherFile {
    weights: Option<Vec<f64>>,
    checkpoint: Option<PathBuf>,
    checkpoints: Option<Vec<PathBuf>>,
    iterations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SelectionName {
    Threshold,
    AbsThreshold,
    TopFraction,
    Prioritized,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ScheduleName {
    Combined,
    Alternating,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct TransferFile {
    beta0: f64,
    beta_decay: f64,
    /// Per-teacher overrides of `beta0` and `beta_decay`.
    teacher_beta0: Option<Vec<f64>>,
    teacher_beta_decay: Option<Vec<f64>>,
    selection: SelectionName,
    zeta: f64,
    top_fraction: f64,
    priority_exponent: f64,
    priority_samples: usize,
    alpha_rep: f64,
    alpha_ins: f64,
    schedule: ScheduleName,
    rep_steps: u32,
    ins_steps: u32,
    repaint_iterations: Option<u64>,
    teacher_rollout_steps: Option<usize>,
    teacher_rollout_episodes: Option<usize>,
    teacher_gae: Option<GaeConfig>,
    diagnostics: bool,
}

impl Default for TransferFile {
    fn default() -> Self {
        Self {
            beta0: 0.2,
            beta_decay: 0.95,
            teacher_beta0: None,
            teacher_beta_decay: None,
            selection: SelectionName::Threshold,
            zeta: 0.8,
            top_fraction: 0.2,
            priority_exponent: 1.0,
            priority_samples: 256,
            alpha_rep: 1.0,
            alpha_ins: 1.0,
            schedule: ScheduleName::Combined,
            rep_steps: 1,
            ins_steps: 1,
            repaint_iterations: None,
            teacher_rollout_steps: None,
            teacher_rollout_episodes: None,
            teacher_gae: None,
            diagnostics: false,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    arm: Arm,
    iterations: usize,
    #[serde(default)]
    seeds: Option<Vec<u64>>,
    eval_episodes: Option<usize>,
    eval_mode: Option<EvalMode>,
    output_dir: Option<PathBuf>,
    #[serde(default)]
    warm_start: bool,
    #[serde(default)]
    record_wall_ms: bool,
    student: TaskFile,
    teacher: Option<TeacherFile>,
    #[serde(default)]
    ppo: PpoConfig,
    #[serde(default)]
    transfer: TransferFile,
}

fn yes() -> bool {
    true
}

fn task_spec(env: EnvId, weights: Vec<f64>, horizon: Option<usize>, normalize: bool, gamma: f64) -> Result<TaskSpec> {
    let mut spec = TaskSpec::new(env, weights)?.with_gamma(gamma);
    if let Some(h) = horizon {
        spec = spec.with_horizon(h);
    }
    if !normalize {
        spec = spec.without_normalization();
    }
    spec.validate()?;
    Ok(spec)
}

impl TransferFile {
    fn build(self, n_teachers: usize, default_budget: Budget) -> Result<TransferConfig> {
        let n = n_teachers.max(1);
        let beta0 = self.teacher_beta0.unwrap_or_else(|| vec![self.beta0; n]);
        let decay = self.teacher_beta_decay.unwrap_or_else(|| vec![self.beta_decay; n]);
        if beta0.len() != n || decay.len() != n {
            return Err(Error::config(format!(
                "transfer.teacher_beta0 and transfer.teacher_beta_decay need one entry per teacher ({n})"
            )));
        }
        let betas = beta0
            .into_iter()
            .zip(decay)
            .map(|(b, d)| BetaSchedule::new(b, d))
            .collect::<Result<Vec<_>>>()?;
        let selection = match self.selection {
            SelectionName::Threshold => SelectionRule::Threshold { zeta: self.zeta },
            SelectionName::AbsThreshold => SelectionRule::AbsThreshold { zeta: self.zeta },
            SelectionName::TopFraction => SelectionRule::TopFraction {
                fraction: self.top_fraction,
            },
            SelectionName::Prioritized => SelectionRule::Prioritized {
                exponent: self.priority_exponent,
                samples: self.priority_samples,
            },
        };
        let teacher_budget = match (self.teacher_rollout_steps, self.teacher_rollout_episodes) {
            (None, None) => default_budget,
            (Some(n), None) => Budget::Steps(n),
            (None, Some(n)) => Budget::Episodes(n),
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "set at most one of transfer.teacher_rollout_steps and transfer.teacher_rollout_episodes",
                ))
            }
        };
        let schedule = match self.schedule {
            ScheduleName::Combined => Schedule::Combined,
            ScheduleName::Alternating => Schedule::Alternating {
                rep_steps: self.rep_steps,
                ins_steps: self.ins_steps,
            },
        };
        let cfg = TransferConfig {
            betas,
            selection,
            alpha_rep: self.alpha_rep,
            alpha_ins: self.alpha_ins,
            schedule,
            repaint_iterations: self.repaint_iterations.unwrap_or(u64::MAX),
            teacher_budget,
            teacher_gae: self.teacher_gae,
            diagnostics: self.diagnostics,
        };
        cfg.validate(n)?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    /// Parses a config file. Relative checkpoint paths are resolved against
    /// `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        let gamma = file.ppo.gae.gamma;
        let env = file
            .student
            .env
            .ok_or_else(|| Error::config("student.env is required"))?;
        let student_weights = file
            .student
            .weights
            .ok_or_else(|| Error::config("student.weights is required"))?;
        let student = task_spec(env, student_weights, file.student.horizon, file.student.normalize, gamma)?;
        let teacher = match file.teacher {
            None => None,
            Some(t) => {
                let mut checkpoints: Vec<PathBuf> = t.checkpoint.into_iter().collect();
                checkpoints.extend(t.checkpoints.unwrap_or_default());
                let checkpoints = checkpoints
                    .into_iter()
                    .map(|p| if p.is_relative() { base_dir.join(p) } else { p })
                    .collect();
                let task = t
                    .weights
                    .map(|w| task_spec(env, w, file.student.horizon, file.student.normalize, gamma))
                    .transpose()?;
                Some(TeacherSetup {
                    task,
                    checkpoints,
                    iterations: t.iterations.unwrap_or(file.iterations),
                })
            }
        };
        let n_teachers = teacher.as_ref().map_or(0, |t| t.checkpoints.len());
        let default_budget = file.ppo.rollout_budget()?;
        let transfer = file.transfer.build(n_teachers, default_budget)?;
        let default_eval = match env {
            EnvId::GoalReacher { .. } => 20,
            _ => 5,
        };
        let cfg = ExperimentConfig {
            arm: file.arm,
            student,
            teacher,
            ppo: file.ppo,
            transfer,
            iterations: file.iterations,
            eval_episodes: file.eval_episodes.unwrap_or(default_eval),
            eval_mode: file.eval_mode.unwrap_or(EvalMode::Stochastic),
            seeds: file.seeds.unwrap_or_else(|| vec![0]),
            output_dir: file.output_dir.unwrap_or_else(|| PathBuf::from("runs")),
            warm_start: file.warm_start,
            record_wall_ms: file.record_wall_ms,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_toml_str(&text, base)
    }

    pub fn teacher_checkpoints(&self) -> &[PathBuf] {
        self.teacher.as_ref().map_or(&[], |t| t.checkpoints.as_slice())
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::config("iterations must be at least 1"));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds must not be empty"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seeds must be distinct"));
        }
        if self.eval_episodes == 0 {
            return Err(Error::config("eval_episodes must be at least 1"));
        }
        self.student.validate()?;
        self.ppo.validate()?;
        if let Some(task) = self.teacher.as_ref().and_then(|t| t.task.as_ref()) {
            if task.env_id != self.student.env_id {
                return Err(Error::config("teacher and student tasks must share an environment"));
            }
        }
        let n_teachers = self.teacher_checkpoints().len();
        match self.arm {
            Arm::Baseline => {
                if self.teacher.is_some() {
                    return Err(Error::config("the baseline arm does not take a [teacher] section"));
                }
                if self.warm_start {
                    return Err(Error::config("warm_start needs a teacher"));
                }
            }
            _ => {
                if n_teachers == 0 {
                    return Err(Error::config(format!("the {} arm needs teacher.checkpoint", self.arm)));
                }
                self.transfer.validate(n_teachers)?;
            }
        }
        Ok(())
    }

    /// The same experiment for another arm. Switching to the baseline drops
    /// the teacher setup, so baseline runs never touch teacher files.
    pub fn with_arm(&self, arm: Arm) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.arm = arm;
        if arm == Arm::Baseline {
            cfg.teacher = None;
            cfg.warm_start = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Transfer settings as the arm applies them: the distillation arm runs
    /// representation slots only and the instance arm runs the combined
    /// update with every cross-entropy weight at zero (so the critic is still
    /// fitted on student experience).
    pub fn effective_transfer(&self) -> TransferConfig {
        let mut t = self.transfer.clone();
        match self.arm {
            Arm::Ks => {
                t.schedule = Schedule::Alternating {
                    rep_steps: 1,
                    ins_steps: 0,
                }
            }
            Arm::It => {
                t.schedule = Schedule::Combined;
                for b in &mut t.betas {
                    b.beta0 = 0.0;
                }
            }
            Arm::Baseline | Arm::Repaint => {}
        }
        t
    }
}
