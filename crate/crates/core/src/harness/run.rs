use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Arm, EvalMode, ExperimentConfig};
use crate::approximator::{load_policy, save_policy, PolicyNetwork};
use crate::envs::{EnvInstance, TaskSpec};
use crate::error::{Error, Result};
use crate::ppo::{ppo_iteration, ActorCritic, IterationMetrics, PpoConfig};
use crate::rollout::Policy;
use crate::seeding::{self, streams};
use crate::transfer::{transfer_iteration, SelectionRule, TeacherPolicy};

pub const CSV_HEADER: &str = "iteration,seed,mean_return,aux_metric,wall_ms";

/// Evaluation of the policy after one training iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub iteration: u64,
    pub seed: u64,
    pub mean_return: f64,
    /// Environment-specific end-of-episode metric, averaged over episodes.
    pub aux_metric: f64,
    pub wall_ms: u64,
}

impl EvalRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.iteration, self.seed, self.mean_return, self.aux_metric, self.wall_ms
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub arm: Arm,
    pub seed: u64,
    pub records: Vec<EvalRecord>,
    pub csv_path: PathBuf,
    pub checkpoint_path: PathBuf,
}

/// Mean return and mean auxiliary metric of `episodes` episodes of `policy`
/// on `spec`. Episode seeds and action noise come from `rng_seed`.
pub fn evaluate_policy<P: Policy + ?Sized>(
    policy: &P,
    spec: &TaskSpec,
    episodes: usize,
    mode: EvalMode,
    rng_seed: u64,
) -> Result<(f64, f64)> {
    let mut env = EnvInstance::new(spec.clone())?;
    let mut rng = seeding::stream_rng(rng_seed, streams::EVALUATION, 0);
    let mut total_return = 0.0;
    let mut total_aux = 0.0;
    for _ in 0..episodes {
        let mut state = env.reset(rng.next_u64());
        loop {
            let dist = policy.action_distribution(&state)?;
            let action = match mode {
                EvalMode::Stochastic => dist.sample(&mut rng),
                EvalMode::Mode => dist.mode(),
            };
            let step = env.step(&action)?;
            total_return += step.reward;
            if step.done {
                break;
            }
            state = step.next_state;
        }
        total_aux += env.aux_metric();
    }
    let n = episodes.max(1) as f64;
    Ok((total_return / n, total_aux / n))
}

pub fn load_teachers(paths: &[PathBuf]) -> Result<Vec<TeacherPolicy>> {
    paths
        .iter()
        .map(|p| {
            let net = load_policy(p)?;
            Ok(TeacherPolicy::new(p.display().to_string(), net))
        })
        .collect()
}

pub fn seed_csv_path(dir: &Path, arm: Arm, seed: u64) -> PathBuf {
    dir.join(format!("{arm}_seed{seed}.csv"))
}

fn train_row(m: &IterationMetrics) -> String {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    format!(
        "{},{:?},{},{},{},{},{},{},{},{},{},{},{}",
        m.iteration,
        m.kind,
        opt(m.mean_return),
        opt(m.critic_loss),
        m.surrogate,
        m.entropy,
        m.cross_entropy,
        m.instance,
        m.kl,
        m.beta,
        m.teacher_samples,
        m.kept_samples,
        opt(m.diagnostic)
    )
}

const TRAIN_HEADER: &str = "iteration,kind,train_return,critic_loss,surrogate,entropy,cross_entropy,instance,kl,beta,teacher_samples,kept_samples,diagnostic";

/// Trains one seed of the configured arm, writing `{arm}_seed{seed}.csv`,
/// a training-metrics CSV and the final actor checkpoint into `out_dir`.
pub fn run_seed(cfg: &ExperimentConfig, teachers: &[TeacherPolicy], seed: u64, out_dir: &Path) -> Result<SeedRun> {
    let spec = &cfg.student;
    let mut env = EnvInstance::new(spec.clone())?;
    let mut agent = ActorCritic::new(spec.env_id.observation_dim(), spec.env_id.action_space(), &cfg.ppo, seed);
    if cfg.warm_start {
        let teacher = teachers
            .first()
            .ok_or_else(|| Error::config("warm_start needs a teacher"))?;
        agent = ActorCritic::from_networks(teacher.network().clone(), agent.critic, &cfg.ppo);
    }
    let transfer = cfg.effective_transfer();
    let csv_path = seed_csv_path(out_dir, cfg.arm, seed);
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut train_csv = String::from(TRAIN_HEADER);
    train_csv.push('\n');
    let mut records = Vec::with_capacity(cfg.iterations);
    for k in 1..=cfg.iterations as u64 {
        let start = Instant::now();
        let metrics = match cfg.arm {
            Arm::Baseline => ppo_iteration(&mut agent, &mut env, &cfg.ppo, seed, k)?,
            _ => transfer_iteration(&mut agent, &mut env, teachers, &cfg.ppo, &transfer, seed, k)?,
        };
        let wall_ms = if cfg.record_wall_ms {
            start.elapsed().as_millis() as u64
        } else {
            0
        };
        let eval_seed = seeding::derive_seed(seed, streams::EVALUATION, k);
        let (mean_return, aux_metric) = evaluate_policy(&agent.actor, spec, cfg.eval_episodes, cfg.eval_mode, eval_seed)?;
        let record = EvalRecord {
            iteration: k,
            seed,
            mean_return,
            aux_metric,
            wall_ms,
        };
        writeln!(csv, "{}", record.csv_row()).expect("writing to a String");
        writeln!(train_csv, "{}", train_row(&metrics)).expect("writing to a String");
        records.push(record);
    }
    fs::create_dir_all(out_dir)?;
    fs::write(&csv_path, csv)?;
    fs::write(out_dir.join(format!("{}_seed{seed}_train.csv", cfg.arm)), train_csv)?;
    let checkpoint_path = out_dir.join(format!("{}_seed{seed}.actor.json", cfg.arm));
    save_policy(&agent.actor, &checkpoint_path)?;
    Ok(SeedRun {
        arm: cfg.arm,
        seed,
        records,
        csv_path,
        checkpoint_path,
    })
}

/// Runs every configured seed (in parallel) into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SeedRun>> {
    cfg.validate()?;
    let teachers = match cfg.arm {
        Arm::Baseline => Vec::new(),
        _ => load_teachers(cfg.teacher_checkpoints())?,
    };
    cfg.seeds
        .par_iter()
        .map(|&seed| run_seed(cfg, &teachers, seed, &cfg.output_dir))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TeacherRun {
    pub actor: PolicyNetwork,
    pub records: Vec<EvalRecord>,
}

/// PPO on the teacher task; the final actor is written to `checkpoint`.
pub fn train_teacher(
    spec: &TaskSpec,
    ppo: &PpoConfig,
    seed: u64,
    iterations: usize,
    eval_episodes: usize,
    checkpoint: &Path,
) -> Result<TeacherRun> {
    ppo.validate()?;
    let mut env = EnvInstance::new(spec.clone())?;
    let mut agent = ActorCritic::new(spec.env_id.observation_dim(), spec.env_id.action_space(), ppo, seed);
    let mut records = Vec::with_capacity(iterations);
    for k in 1..=iterations as u64 {
        ppo_iteration(&mut agent, &mut env, ppo, seed, k)?;
        if eval_episodes > 0 {
            let eval_seed = seeding::derive_seed(seed, streams::EVALUATION, k);
            let (mean_return, aux_metric) =
                evaluate_policy(&agent.actor, spec, eval_episodes, EvalMode::Stochastic, eval_seed)?;
            records.push(EvalRecord {
                iteration: k,
                seed,
                mean_return,
                aux_metric,
                wall_ms: 0,
            });
        }
    }
    save_policy(&agent.actor, checkpoint)?;
    Ok(TeacherRun {
        actor: agent.actor,
        records,
    })
}

#[derive(Debug, Clone)]
pub struct RuleRun {
    pub rule: SelectionRule,
    pub runs: Vec<SeedRun>,
}

/// Runs the experiment once per selection rule (same seeds), each into
/// `output_dir/<rule label>/`, and writes `selection_rules.csv` with one
/// seed-averaged return column per rule.
pub fn compare_selection_rules(cfg: &ExperimentConfig, rules: &[SelectionRule]) -> Result<Vec<RuleRun>> {
    if !matches!(cfg.arm, Arm::It | Arm::Repaint) {
        return Err(Error::config("comparing selection rules needs the it or repaint arm"));
    }
    if rules.is_empty() {
        return Err(Error::config("no selection rules given"));
    }
    let mut out = Vec::with_capacity(rules.len());
    for rule in rules {
        let mut c = cfg.clone();
        c.transfer.selection = *rule;
        c.output_dir = cfg.output_dir.join(rule.label());
        out.push(RuleRun {
            rule: *rule,
            runs: run_experiment(&c)?,
        });
    }
    let mut csv = String::from("iteration");
    for r in &out {
        write!(csv, ",{}", r.rule.label()).expect("writing to a String");
    }
    csv.push('\n');
    for k in 0..cfg.iterations {
        write!(csv, "{}", k + 1).expect("writing to a String");
        for r in &out {
            let mean = r.runs.iter().map(|s| s.records[k].mean_return).sum::<f64>() / r.runs.len() as f64;
            write!(csv, ",{mean}").expect("writing to a String");
        }
        csv.push('\n');
    }
    fs::create_dir_all(&cfg.output_dir)?;
    fs::write(cfg.output_dir.join("selection_rules.csv"), csv)?;
    Ok(out)
}

/// Parses a per-seed evaluation CSV.
pub fn read_records_csv(path: &Path) -> Result<Vec<EvalRecord>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let bad = |why: String| Error::config(format!("{}: {why}", path.display()));
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => return Err(bad(format!("unexpected header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(bad(format!("row {} has {} fields", i + 1, f.len())));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| bad(format!("row {}: {e}", i + 1)));
            let int = |s: &str| s.trim().parse::<u64>().map_err(|e| bad(format!("row {}: {e}", i + 1)));
            Ok(EvalRecord {
                iteration: int(f[0])?,
                seed: int(f[1])?,
                mean_return: num(f[2])?,
                aux_metric: num(f[3])?,
                wall_ms: int(f[4])?,
            })
        })
        .collect()
}

/// Reads every `{arm}_seed{n}.csv` in `dir`, grouped by arm.
pub fn load_run_dir(dir: &Path) -> Result<Vec<(Arm, Vec<EvalRecord>)>> {
    let mut by_arm: Vec<(Arm, Vec<EvalRecord>)> = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)?.map(|e| e.map(|e| e.path())).collect::<std::io::Result<_>>()?;
    entries.sort();
    for path in entries {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_suffix(".csv") else {
            continue;
        };
        let Some((arm, seed)) = stem.split_once("_seed") else {
            continue;
        };
        if seed.parse::<u64>().is_err() {
            continue;
        }
        let Ok(arm) = arm.parse::<Arm>() else {
            continue;
        };
        let records = read_records_csv(&path)?;
        match by_arm.iter_mut().find(|(a, _)| *a == arm) {
            Some((_, rs)) => rs.extend(records),
            None => by_arm.push((arm, records)),
        }
    }
    by_arm.sort_by_key(|(a, _)| *a);
    Ok(by_arm)
}
