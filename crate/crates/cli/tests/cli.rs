use std::path::Path;
use std::process::{Command, Output};

use pglo::engine::RunConfig;

const SMALL: [&str; 12] =
    ["--set", "problem=quadratic", "--set", "dim=2", "--set", "K=2", "--set", "T=300", "--set", "n_max=12", "--set", "m=8"];

fn pglo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pglo")).args(args).output().expect("binary runs")
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--quiet", "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    pglo(&args)
}

fn read_config(dir: &Path) -> RunConfig {
    serde_json::from_str(&std::fs::read_to_string(dir.join("config.json")).unwrap()).unwrap()
}

#[test]
fn run_echoes_the_resolved_configuration() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_into(tmp.path(), &["--set", "T=100"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echoed = read_config(tmp.path());
    let expected = RunConfig { t: 100, ..RunConfig::default() }.resolve().unwrap();
    assert_eq!(echoed, expected);
    assert_eq!(echoed.n_0, Some(20));
    for f in ["trace.csv", "summary.json", "state.json"] {
        assert!(tmp.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn overrides_and_config_files_combine() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg_path = tmp.path().join("in.json");
    std::fs::write(&cfg_path, r#"{"problem": "quadratic", "dim": 2, "K": 2, "T": 300, "n_max": 12, "m": 8}"#).unwrap();
    let dir = tmp.path().join("out");
    let out = run_into(&dir, &["--config", cfg_path.to_str().unwrap(), "--seed", "9", "--set", "q=4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let c = read_config(&dir);
    assert_eq!((c.q, c.seed, c.t, c.problem.as_str()), (4, 9, 300, "quadratic"));
}

#[test]
fn invalid_configuration_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_into(tmp.path(), &["--set", "T=99"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_0"));
    assert_eq!(run_into(tmp.path(), &["--set", "nonsense=1"]).status.code(), Some(2));
    assert_eq!(run_into(tmp.path(), &["--set", "q"]).status.code(), Some(2));
}

#[test]
fn repeated_runs_write_identical_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_into(&a, &SMALL).status.success());
    assert!(run_into(&b, &SMALL).status.success());
    let read = |d: &Path| std::fs::read(d.join("trace.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert!(!read(&a).is_empty());
}

#[test]
fn study_writes_rows_and_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("study");
    let mut args = vec!["study", "--quiet", "--out", dir.to_str().unwrap(), "--seeds", "3", "--variants", "pglo:1,multpps-lhs:1", "--jobs", "2"];
    args.extend_from_slice(&SMALL);
    let out = pglo(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = std::fs::read_to_string(dir.join("study_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3, "{summary}");
    let runs = std::fs::read_to_string(dir.join("study_runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 7);
    assert_eq!(std::fs::read_dir(dir.join("traces")).unwrap().count(), 6);
    assert!(dir.join("convergence_quantiles.csv").is_file());
    let bad = pglo(&["study", "--quiet", "--out", dir.to_str().unwrap(), "--variants", "tsso:1"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn saved_models_validate() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_into(tmp.path(), &SMALL).status.success());
    assert!(tmp.path().join("model.json").is_file());
    let out = pglo(&["validate-model", "--dir", tmp.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("rmse") && text.contains("within_three"), "{text}");
    let missing = pglo(&["validate-model", "--dir", tmp.path().join("nowhere").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(4));
}

#[test]
fn problems_are_listed() {
    let out = pglo(&["list-problems"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["sun", "griewank", "ackley", "levy", "schwefel", "quadratic"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name}");
    }
}
