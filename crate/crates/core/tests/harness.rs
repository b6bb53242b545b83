use std::fs;
use std::path::Path;

use repaint_core::approximator::{load_policy, PolicyNetwork};
use repaint_core::envs::{EnvId, TaskSpec};
use repaint_core::harness::{
    compare_selection_rules, compute_report, evaluate_policy, load_run_dir, run_experiment, train_teacher, Arm,
    EvalMode, ExperimentConfig, TargetScore, CSV_HEADER,
};
use repaint_core::ppo::{ActorCritic, PpoConfig};
use repaint_core::transfer::SelectionRule;

const BASE: &str = r#"
arm = "repaint"
iterations = 3
seeds = [0, 1]
eval_episodes = 4
student.env = "goal-reacher-1d"
student.weights = [1.0, -1.0, 1.0]
teacher.weights = [1.0, -3.0, 1.0]
teacher.checkpoint = "teacher.json"
teacher.iterations = 2
ppo.rollout_steps = 128
ppo.epochs = 2
ppo.hidden = [8, 8]
transfer.zeta = 0.0
"#;

fn config(dir: &Path, extra: &str) -> ExperimentConfig {
    let text = format!("{BASE}output_dir = \"{}\"\n{extra}", dir.join("out").display());
    ExperimentConfig::from_toml_str(&text, dir).unwrap()
}

fn with_teacher(dir: &Path, extra: &str) -> ExperimentConfig {
    let cfg = config(dir, extra);
    let t = cfg.teacher.as_ref().unwrap();
    train_teacher(t.task.as_ref().unwrap(), &cfg.ppo, 42, t.iterations, 0, &t.checkpoints[0]).unwrap();
    cfg
}

#[test]
fn one_iteration_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), "").with_arm(Arm::Baseline).unwrap();
    cfg.iterations = 1;
    cfg.seeds = vec![0];
    let runs = run_experiment(&cfg).unwrap();
    let text = fs::read_to_string(&runs[0].csv_path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, vec![CSV_HEADER, lines[1]]);
    assert!(lines[1].starts_with("1,0,"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_teacher(dir.path(), "");
    let first = run_experiment(&cfg).unwrap();
    let bytes: Vec<Vec<u8>> = first.iter().map(|r| fs::read(&r.csv_path).unwrap()).collect();
    let second = run_experiment(&cfg).unwrap();
    for (run, old) in second.iter().zip(bytes) {
        assert_eq!(fs::read(&run.csv_path).unwrap(), old);
    }
}

#[test]
fn kickstarting_with_zero_beta_tracks_the_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_teacher(dir.path(), "transfer.beta0 = 0.0\n");
    let mut ks = cfg.with_arm(Arm::Ks).unwrap();
    ks.output_dir = dir.path().join("ks");
    let mut base = cfg.with_arm(Arm::Baseline).unwrap();
    base.output_dir = dir.path().join("base");
    let a = run_experiment(&ks).unwrap();
    let b = run_experiment(&base).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.records, y.records);
    }
}

#[test]
fn baseline_never_reads_teacher_files() {
    let dir = tempfile::tempdir().unwrap();
    // The checkpoint does not exist; the baseline must not care.
    let cfg = config(dir.path(), "").with_arm(Arm::Baseline).unwrap();
    assert!(cfg.teacher.is_none());
    assert!(run_experiment(&cfg).is_ok());
    let missing = config(dir.path(), "");
    assert!(run_experiment(&missing).is_err());
}

#[test]
fn untrained_teacher_is_its_initialisation() {
    let dir = tempfile::tempdir().unwrap();
    let spec = TaskSpec::new(EnvId::GoalReacher { dims: 1, continuous: false }, vec![1.0, -3.0, 1.0]).unwrap();
    let ppo = PpoConfig {
        hidden: vec![8, 8],
        ..PpoConfig::default()
    };
    let path = dir.path().join("t.json");
    let run = train_teacher(&spec, &ppo, 5, 0, 3, &path).unwrap();
    let init = ActorCritic::new(spec.env_id.observation_dim(), spec.env_id.action_space(), &ppo, 5).actor;
    assert_eq!(run.actor.params().as_slice(), init.params().as_slice());
    assert!(run.records.is_empty());
    let loaded: PolicyNetwork = load_policy(&path).unwrap();
    for s in [[0.1, -0.3], [0.7, 0.2]] {
        assert_eq!(loaded.forward(&s).unwrap(), init.forward(&s).unwrap());
    }
}

#[test]
fn trained_teacher_beats_a_random_policy() {
    let spec = TaskSpec::new(EnvId::GoalReacher { dims: 1, continuous: false }, vec![1.0, -3.0, 1.0]).unwrap();
    let ppo = PpoConfig {
        rollout_steps: Some(512),
        hidden: vec![16, 16],
        ..PpoConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut wins = 0;
    for seed in 0..5 {
        let path = dir.path().join(format!("t{seed}.json"));
        let run = train_teacher(&spec, &ppo, seed, 100, 0, &path).unwrap();
        let (trained, _) = evaluate_policy(&run.actor, &spec, 20, EvalMode::Stochastic, 1000 + seed).unwrap();
        let init = ActorCritic::new(spec.env_id.observation_dim(), spec.env_id.action_space(), &ppo, seed).actor;
        let (random, _) = evaluate_policy(&init, &spec, 20, EvalMode::Stochastic, 1000 + seed).unwrap();
        if trained > random {
            wins += 1;
        }
    }
    assert!(wins >= 4, "teacher beat the random policy on {wins}/5 seeds");
}

#[test]
fn report_is_recomputable_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_teacher(dir.path(), "");
    let mut in_memory = Vec::new();
    for arm in [Arm::Baseline, Arm::Repaint] {
        let c = cfg.with_arm(arm).unwrap();
        let runs = run_experiment(&c).unwrap();
        in_memory.push((arm, runs.into_iter().flat_map(|r| r.records).collect::<Vec<_>>()));
    }
    let from_disk = load_run_dir(&cfg.output_dir).unwrap();
    let a = compute_report(&in_memory, TargetScore::Auto).unwrap();
    let b = compute_report(&from_disk, TargetScore::Auto).unwrap();
    assert_eq!(a, b);
}

#[test]
fn keep_all_rules_give_identical_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_teacher(dir.path(), "");
    let rules = [
        SelectionRule::Threshold { zeta: f64::NEG_INFINITY },
        SelectionRule::TopFraction { fraction: 1.0 },
    ];
    let out = compare_selection_rules(&cfg, &rules).unwrap();
    for (a, b) in out[0].runs.iter().zip(&out[1].runs) {
        assert_eq!(a.records, b.records);
        let train = |r: &repaint_core::harness::SeedRun| {
            fs::read_to_string(r.csv_path.with_file_name(format!("{}_seed{}_train.csv", r.arm, r.seed))).unwrap()
        };
        assert_eq!(train(a), train(b));
    }
}

#[test]
fn rule_comparison_emits_aligned_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = with_teacher(dir.path(), "");
    let rules = [
        SelectionRule::Threshold { zeta: 0.0 },
        SelectionRule::TopFraction { fraction: 0.2 },
    ];
    compare_selection_rules(&cfg, &rules).unwrap();
    let text = fs::read_to_string(cfg.output_dir.join("selection_rules.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + cfg.iterations);
    assert!(lines.iter().all(|l| l.split(',').count() == 3));
    assert_eq!(lines[1].split(',').next(), Some("1"));
    // A single rule reproduces the plain experiment.
    let single = compare_selection_rules(&cfg, &rules[..1]).unwrap();
    let mut plain = cfg.clone();
    plain.output_dir = dir.path().join("plain");
    let runs = run_experiment(&plain).unwrap();
    for (a, b) in single[0].runs.iter().zip(&runs) {
        assert_eq!(a.records, b.records);
    }
}

#[test]
fn baseline_rejects_rule_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "").with_arm(Arm::Baseline).unwrap();
    assert!(compare_selection_rules(&cfg, &[SelectionRule::Threshold { zeta: 0.0 }]).is_err());
}

#[test]
fn warm_start_copies_the_teacher() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = with_teacher(dir.path(), "warm_start = true\n");
    cfg.iterations = 1;
    cfg.seeds = vec![0];
    cfg.transfer.repaint_iterations = 0;
    let runs = run_experiment(&cfg).unwrap();
    assert_eq!(runs[0].records.len(), 1);
    assert!(config(dir.path(), "warm_start = true\n").with_arm(Arm::Baseline).unwrap().teacher.is_none());
}
