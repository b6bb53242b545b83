use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use repaint_core::harness::{
    compare_selection_rules, compute_report, load_run_dir, run_experiment, train_teacher, Arm, ExperimentConfig,
    ExperimentReport, TargetScore,
};
use repaint_core::{EnvId, SelectionRule};

#[derive(Parser)]
#[command(name = "repaint", version, about = "Actor-critic transfer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Run a single seed.
    #[arg(long, conflicts_with = "seeds")]
    seed: Option<u64>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    arm: Option<Arm>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a teacher with PPO on the config's teacher task.
    TrainTeacher {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Checkpoint path; defaults to the config's first teacher checkpoint.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<usize>,
    },
    /// Train the configured arm for every seed and write evaluation CSVs.
    Run(RunArgs),
    /// Summarise the CSVs in a run directory as a JSON report.
    Report {
        #[arg(long)]
        out: PathBuf,
        /// `auto` (best seed-averaged baseline score) or a number.
        #[arg(long, default_value = "auto")]
        target: String,
    },
    /// Run once per experience selection rule with shared seeds.
    CompareRules {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated rules, e.g. `threshold:0.8,top-fraction:0.2`.
        #[arg(long, value_delimiter = ',', required = true)]
        rules: Vec<SelectionRule>,
    },
    /// Print the feature map and action space of an environment.
    DescribeEnv {
        /// Environment id; all environments when omitted.
        env: Option<EnvId>,
    },
}

fn load_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut cfg =
        ExperimentConfig::from_file(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    if let Some(arm) = args.arm {
        cfg = cfg.with_arm(arm)?;
    }
    if let Some(seed) = args.seed {
        cfg.seeds = vec![seed];
    }
    if let Some(seeds) = &args.seeds {
        cfg.seeds = seeds.clone();
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_target(s: &str) -> Result<TargetScore> {
    if s == "auto" {
        return Ok(TargetScore::Auto);
    }
    let v: f64 = s.parse().with_context(|| format!("target must be `auto` or a number, got {s:?}"))?;
    Ok(TargetScore::Value(v))
}

fn print_report(report: &ExperimentReport) {
    println!("target score {:.6}{}", report.target_score, if report.target_is_auto { " (auto)" } else { "" });
    for arm in &report.arms {
        let k = arm
            .iterations_to_target
            .0
            .map_or_else(|| "Not achieved".to_string(), |k| k.to_string());
        println!(
            "{:<9} K = {:<13} reduction {:<13} best {:.6}",
            arm.arm.name(),
            k,
            arm.reduction,
            arm.best_score
        );
    }
}

fn write_report(dir: &Path, target: TargetScore) -> Result<ExperimentReport> {
    let records = load_run_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    if records.is_empty() {
        bail!("no evaluation CSVs found in {}", dir.display());
    }
    let report = compute_report(&records, target)?;
    let path = dir.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainTeacher {
            config,
            seed,
            out,
            iterations,
        } => {
            let cfg = ExperimentConfig::from_file(&config).with_context(|| format!("loading {}", config.display()))?;
            let Some(teacher) = &cfg.teacher else {
                bail!("the config has no [teacher] section");
            };
            let Some(task) = &teacher.task else {
                bail!("teacher.weights is required to train a teacher");
            };
            let path = match out.or_else(|| teacher.checkpoints.first().cloned()) {
                Some(p) => p,
                None => bail!("no checkpoint path: pass --out or set teacher.checkpoint"),
            };
            let iterations = iterations.unwrap_or(teacher.iterations);
            let run = train_teacher(task, &cfg.ppo, seed, iterations, cfg.eval_episodes, &path)?;
            if let Some(last) = run.records.last() {
                println!("iteration {}: mean return {:.6}", last.iteration, last.mean_return);
            }
            println!("teacher checkpoint written to {}", path.display());
        }
        Command::Run(args) => {
            let cfg = load_config(&args)?;
            let runs = run_experiment(&cfg)?;
            for r in &runs {
                let last = r.records.last().map_or(f64::NAN, |x| x.mean_return);
                println!("{} seed {}: final return {:.6} -> {}", r.arm, r.seed, last, r.csv_path.display());
            }
        }
        Command::Report { out, target } => {
            let report = write_report(&out, parse_target(&target)?)?;
            print_report(&report);
            println!("report written to {}", out.join("report.json").display());
        }
        Command::CompareRules { run, rules } => {
            let cfg = load_config(&run)?;
            let results = compare_selection_rules(&cfg, &rules)?;
            for r in &results {
                let mean_final = r.runs.iter().filter_map(|s| s.records.last()).map(|x| x.mean_return).sum::<f64>()
                    / r.runs.len() as f64;
                println!("{:<28} mean final return {:.6}", r.rule.label(), mean_final);
            }
            println!("overlay written to {}", cfg.output_dir.join("selection_rules.csv").display());
        }
        Command::DescribeEnv { env } => {
            let envs: Vec<EnvId> = match env {
                Some(e) => vec![e],
                None => EnvId::ALL.to_vec(),
            };
            for (i, e) in envs.iter().enumerate() {
                if i > 0 {
                    println!();
                }
                println!("{}", e.describe());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
