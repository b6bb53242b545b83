use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn repaint(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repaint"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const CONFIG: &str = r#"
arm = "repaint"
iterations = 2
seeds = [0, 1]
eval_episodes = 3
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

#[test]
fn describe_env_lists_features() {
    let dir = tempfile::tempdir().unwrap();
    let out = repaint(&["describe-env", "goal-reacher-1d"], dir.path());
    assert!(out.status.success());
    assert!(stdout(&out).contains("neg_goal_distance"));
    let all = repaint(&["describe-env"], dir.path());
    assert!(all.status.success());
    assert!(stdout(&all).contains("lane-grid"));
}

#[test]
fn invalid_configs_fail_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), format!("{CONFIG}transfer.not_a_key = 1\n")).unwrap();
    let out = repaint(&["run", "--config", "bad.toml"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("error:"));

    let missing = repaint(&["run", "--config", "nope.toml"], dir.path());
    assert!(!missing.status.success());

    fs::write(dir.path().join("ok.toml"), CONFIG).unwrap();
    let no_teacher = repaint(&["run", "--config", "ok.toml", "--arm", "repaint"], dir.path());
    assert!(!no_teacher.status.success());
}

#[test]
fn train_run_and_report() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), CONFIG).unwrap();
    let t = repaint(&["train-teacher", "--config", "exp.toml", "--seed", "3"], dir.path());
    assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
    assert!(dir.path().join("teacher.json").exists());

    for arm in ["baseline", "ks", "it", "repaint"] {
        let r = repaint(&["run", "--config", "exp.toml", "--arm", arm, "--out", "out"], dir.path());
        assert!(r.status.success(), "{arm}: {}", String::from_utf8_lossy(&r.stderr));
    }
    let single = repaint(&["run", "--config", "exp.toml", "--arm", "baseline", "--seed", "7", "--out", "solo"], dir.path());
    assert!(single.status.success());
    assert!(dir.path().join("solo/baseline_seed7.csv").exists());

    let report = repaint(&["report", "--out", "out"], dir.path());
    assert!(report.status.success(), "{}", String::from_utf8_lossy(&report.stderr));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap()).unwrap();
    assert_eq!(json["target_is_auto"], true);
    assert_eq!(json["arms"].as_array().unwrap().len(), 4);
    for arm in json["arms"].as_array().unwrap() {
        assert_eq!(arm["per_seed"].as_array().unwrap().len(), 2);
    }
    let fixed = repaint(&["report", "--out", "out", "--target", "1e9"], dir.path());
    assert!(fixed.status.success());
    assert!(stdout(&fixed).contains("Not achieved"));

    let rules = repaint(
        &["compare-rules", "--config", "exp.toml", "--rules", "threshold:0,top-fraction:0.5", "--out", "rules"],
        dir.path(),
    );
    assert!(rules.status.success(), "{}", String::from_utf8_lossy(&rules.stderr));
    assert!(dir.path().join("rules/selection_rules.csv").exists());
}

#[test]
fn seed_flags_conflict() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("exp.toml"), CONFIG).unwrap();
    let out = repaint(&["run", "--config", "exp.toml", "--seed", "1", "--seeds", "1,2"], dir.path());
    assert!(!out.status.success());
}
