//! End-to-end tests of the scenario runner: config parsing, bundled
//! scenarios, output determinism, and binary exit codes.

use std::fs;
use std::path::Path;
use std::process::Command;

use conic_cli::config::ScenarioConfig;
use conic_cli::plots::emit_plots;
use conic_cli::runner::run;
use conic_cli::scenarios;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conic"))
}

#[test]
fn committed_scenario_files_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = fs::read_to_string(&path).unwrap();
            ScenarioConfig::parse(&text)
                .unwrap_or_else(|e| panic!("{} invalid: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(
        seen >= 4,
        "expected the committed scenario examples, found {seen}"
    );
}

#[test]
fn every_bundled_scenario_validates() {
    for cfg in scenarios::catalog() {
        cfg.validate()
            .unwrap_or_else(|e| panic!("{} invalid: {e}", cfg.name));
        // round trip through TOML to keep presets expressible as files
        let text = toml::to_string(&cfg).unwrap();
        ScenarioConfig::parse(&text).unwrap_or_else(|e| panic!("{} reparse: {e}", cfg.name));
    }
}

#[test]
fn drift_scenario_runs_and_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenarios::by_name("minkowski-lorentz-massshell").unwrap();
    let outcome = run(cfg, tmp.path()).unwrap();
    assert!(outcome.all_passed());
    assert!(outcome.summary_path.exists());
    assert!(!outcome.artifacts.is_empty());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&outcome.summary_path).unwrap()).unwrap();
    assert_eq!(summary["all_passed"], true);
    assert_eq!(summary["seed"], 42);
}

#[test]
fn identical_config_and_seed_give_byte_identical_csv() {
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    let cfg = scenarios::by_name("transport-density").unwrap();
    run(cfg.clone(), tmp_a.path()).unwrap();
    run(cfg.clone(), tmp_b.path()).unwrap();
    let dir_a = tmp_a.path().join(&cfg.name);
    let dir_b = tmp_b.path().join(&cfg.name);
    let mut names: Vec<String> = fs::read_dir(&dir_a)
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for name in names {
        let a = fs::read(dir_a.join(&name)).unwrap();
        let b = fs::read(dir_b.join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    // summaries agree except for the isolated timestamp field
    let norm = |dir: &Path| -> serde_json::Value {
        let mut v: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("timestamp_unix");
        v
    };
    assert_eq!(norm(&dir_a), norm(&dir_b));
}

#[test]
fn different_seed_changes_sampled_artifacts() {
    let tmp_a = tempfile::tempdir().unwrap();
    let tmp_b = tempfile::tempdir().unwrap();
    let mut cfg = scenarios::by_name("transport-density").unwrap();
    run(cfg.clone(), tmp_a.path()).unwrap();
    cfg.numeric.seed = 43;
    run(cfg.clone(), tmp_b.path()).unwrap();
    let a = fs::read(tmp_a.path().join(&cfg.name).join("ensemble_initial.csv")).unwrap();
    let b = fs::read(tmp_b.path().join(&cfg.name).join("ensemble_initial.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn emit_plots_writes_long_format() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = scenarios::by_name("free-trajectories").unwrap();
    run(cfg.clone(), tmp.path()).unwrap();
    let run_dir = tmp.path().join(&cfg.name);
    let files = emit_plots(&run_dir).unwrap();
    assert_eq!(files.len(), 1);
    let text = fs::read_to_string(run_dir.join("plots/long.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "series,row,variable,value");
    assert!(lines.next().unwrap().starts_with("trajectory_000,0,t,"));
}

#[test]
fn cross_field_validation_catches_bad_combinations() {
    let parse = |text: &str| ScenarioConfig::parse(text);
    // labtime indicator without a lab time on the model
    let bad = parse(
        "name = \"x\"\n[model]\ncatalog = \"minkowski4\"\n[run]\nkind = \"drift\"\nindicator = \"labtime\"\n",
    );
    assert!(bad.is_err());
    assert!(bad.unwrap_err().to_string().contains("model.labtime"));
    // null-labtime on a 4D model
    let bad =
        parse("name = \"x\"\n[model]\ncatalog = \"minkowski4\"\n[run]\nkind = \"null-labtime\"\n");
    assert!(bad.is_err());
    // moments on a 2D model
    let bad = parse("name = \"x\"\n[model]\ncatalog = \"minkowski2\"\n[run]\nkind = \"moments\"\n");
    assert!(bad.is_err());
    // decreasing span
    let bad = parse(
        "name = \"x\"\n[model]\ncatalog = \"minkowski4\"\n[run]\nkind = \"drift\"\n[numeric]\nspan = [1.0, 0.0]\n",
    );
    assert!(bad.is_err());
}

#[test]
fn binary_exit_codes() {
    // 0: passing scenario
    let tmp = tempfile::tempdir().unwrap();
    let ok = bin()
        .args(["check", "numeric-hygiene", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );

    // 2: unknown scenario
    let unknown = bin().args(["check", "no-such-scenario"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));

    // 2: invalid config file
    let bad = tmp.path().join("bad.toml");
    fs::write(
        &bad,
        "name = \"x\"\n[model]\ncatalog = \"nope\"\n[run]\nkind = \"drift\"\n",
    )
    .unwrap();
    let invalid = bin().arg("run").arg(&bad).output().unwrap();
    assert_eq!(invalid.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("model.catalog"));

    // 1: a failing check (tolerances scaled down hard)
    let fail = bin()
        .args(["check", "nonmetric-slip", "--tol", "1e-12", "--out"])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(fail.status.code(), Some(1));
}

#[test]
fn seed_and_steps_overrides_reach_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "check",
            "minkowski-lorentz-massshell",
            "--seed",
            "99",
            "--steps",
            "500",
            "--out",
        ])
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let summary: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(
            tmp.path()
                .join("minkowski-lorentz-massshell")
                .join("summary.json"),
        )
        .unwrap(),
    )
    .unwrap();
    assert_eq!(summary["seed"], 99);
}
