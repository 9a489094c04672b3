//! End-to-end contract tests for the command-line interface: exit codes,
//! schema round-trips and output formats.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_twoweight")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("twoweight-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn generate_is_deterministic_and_parses_as_scenario() {
    let out1 = Command::new(bin())
        .args([
            "generate", "--seed", "42", "--n", "2", "--alpha", "0.5", "--atoms-sigma", "4",
            "--atoms-omega", "3", "--line", "omega",
        ])
        .output()
        .unwrap();
    assert!(out1.status.success());
    let out2 = Command::new(bin())
        .args([
            "generate", "--seed", "42", "--n", "2", "--alpha", "0.5", "--atoms-sigma", "4",
            "--atoms-omega", "3", "--line", "omega",
        ])
        .output()
        .unwrap();
    assert_eq!(out1.stdout, out2.stdout, "same seed must give identical bytes");
    let scenario: twoweight::Scenario = serde_json::from_slice(&out1.stdout).unwrap();
    scenario.validate().unwrap();
    assert_eq!(scenario.omega.atoms.len(), 3);
}

#[test]
fn constants_report_round_trips_and_has_closed_form_norm() {
    let config = tmp("two-atom.json");
    std::fs::write(
        &config,
        r#"{
  "schema_version": 1,
  "scenario": {
    "dimension": 2,
    "alpha": 1.0,
    "sigma": {"dimension": 2, "atoms": [{"location": [0.0, 0.0], "mass": 1.0}]},
    "omega": {"dimension": 2, "atoms": [{"location": [3.0, 4.0], "mass": 1.0}]},
    "goodness": {"r": 4, "epsilon": 0.5, "gamma": 4.0, "gamma_prime": 2.5, "c0": 0.2, "ell_max": 2},
    "grids": [{"dimension": 2, "shift": [0.0, 0.0], "level_min": -3, "level_max": 4, "root_coords": [0, 0]}]
  }
}"#,
    )
    .unwrap();
    let out = Command::new(bin())
        .args(["constants", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: twoweight::report::Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.kind, "constants");
    let constants = &report.constants[0];
    assert!((constants.op_norm.value - 0.2).abs() < 1e-12);
    assert!((constants.testing_forward.value - 0.2).abs() < 1e-12);
    // Reruns are byte-identical.
    let again = Command::new(bin())
        .args(["constants", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.stdout, again.stdout);

    // CSV projection: fixed header, one row per constant.
    let csv = Command::new(bin())
        .args(["constants", "--config", config.to_str().unwrap(), "--format", "csv"])
        .output()
        .unwrap();
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "record,name,value,pass,samples,degenerate,family,strategy,witness"
    );
    assert_eq!(text.lines().filter(|l| l.starts_with("constant,")).count(), 11);
}

#[test]
fn invalid_configs_exit_with_code_2() {
    // Unknown key.
    let config = tmp("bad-key.json");
    std::fs::write(&config, r#"{"schema_version": 1, "scenariooo": {}}"#).unwrap();
    let out = Command::new(bin())
        .args(["constants", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "validation");

    // Common point mass.
    let config2 = tmp("common-point.json");
    std::fs::write(
        &config2,
        r#"{
  "schema_version": 1,
  "scenario": {
    "dimension": 2,
    "alpha": 1.0,
    "sigma": {"dimension": 2, "atoms": [{"location": [0.5, 0.5], "mass": 1.0}]},
    "omega": {"dimension": 2, "atoms": [{"location": [0.5, 0.5], "mass": 2.0}]},
    "goodness": {"r": 4, "epsilon": 0.5, "gamma": 4.0, "gamma_prime": 2.5, "c0": 0.2, "ell_max": 2},
    "grids": [{"dimension": 2, "shift": [0.0, 0.0], "level_min": 0, "level_max": 4, "root_coords": [0, 0]}]
  }
}"#,
    )
    .unwrap();
    let out2 = Command::new(bin())
        .args(["constants", "--config", config2.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out2.status.code(), Some(2));

    // Missing subcommand argument.
    let out3 = Command::new(bin()).args(["constants"]).output().unwrap();
    assert_eq!(out3.status.code(), Some(2));
}

#[test]
fn verify_exactness_suite_passes_and_budget_overrides_flip_exit() {
    let config = tmp("verify.json");
    std::fs::write(&config, r#"{"schema_version": 1, "exactness_level_max": 4}"#).unwrap();
    let out = Command::new(bin())
        .args(["verify", "--config", config.to_str().unwrap(), "--suite", "exactness"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    // stdout is a clean report payload that re-parses under the schema.
    let report: twoweight::report::Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.kind, "verify");
    assert!(report.checks.iter().all(|c| c.pass));

    // An impossible budget on an exactness-tier check forces exit 3.
    let config3 = tmp("verify-tight.json");
    std::fs::write(
        &config3,
        r#"{"schema_version": 1, "exactness_level_max": 4, "budgets": {"testing_vs_norm": 1e-30}}"#,
    )
    .unwrap();
    let out3 = Command::new(bin())
        .args(["verify", "--config", config3.to_str().unwrap(), "--suite", "exactness"])
        .output()
        .unwrap();
    assert_eq!(out3.status.code(), Some(3));
}

#[test]
fn report_merge_combines_payloads() {
    let config = tmp("merge-src.json");
    std::fs::write(
        &config,
        r#"{"schema_version": 1, "generator": {"seed": 3, "n": 2, "alpha": 1.0, "atoms_sigma": 3, "atoms_omega": 3, "which_on_line": "omega"}}"#,
    )
    .unwrap();
    let r1 = tmp("r1.json");
    let r2 = tmp("r2.json");
    for path in [&r1, &r2] {
        let out = Command::new(bin())
            .args([
                "constants",
                "--config",
                config.to_str().unwrap(),
                "--out",
                path.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let merged = Command::new(bin())
        .args(["report", "--merge", r1.to_str().unwrap(), r2.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(merged.status.success());
    let report: twoweight::report::Report = serde_json::from_slice(&merged.stdout).unwrap();
    assert_eq!(report.kind, "merged");
    assert_eq!(report.constants.len(), 2);
}

#[test]
fn baseline_tier_budget_override_exits_with_code_1() {
    let config = tmp("verify-baseline-tight.json");
    std::fs::write(
        &config,
        r#"{"schema_version": 1, "budgets": {"necessity_forward": 1e-30}}"#,
    )
    .unwrap();
    let out = Command::new(bin())
        .args(["verify", "--config", config.to_str().unwrap(), "--suite", "baseline"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));

    // Without the override the baseline tier passes against its frozen values.
    let config_ok = tmp("verify-baseline-ok.json");
    std::fs::write(&config_ok, r#"{"schema_version": 1}"#).unwrap();
    let ok = Command::new(bin())
        .args(["verify", "--config", config_ok.to_str().unwrap(), "--suite", "baseline"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
}

#[test]
fn command_list_restriction_is_enforced() {
    let config = tmp("commands.json");
    std::fs::write(
        &config,
        r#"{"schema_version": 1, "commands": ["verify"], "generator": {"seed": 3, "n": 2, "alpha": 1.0, "atoms_sigma": 3, "atoms_omega": 3, "which_on_line": "omega"}}"#,
    )
    .unwrap();
    let out = Command::new(bin())
        .args(["constants", "--config", config.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
