//! End-to-end checks of the installed binary: flag handling, config
//! validation, exit codes, artifact schemas, and byte-level determinism.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gradmcmc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary should spawn")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path
}

/// Toy five-position two-token model with the given kernel block.
fn toy_config(kernel: &str, extra: &str) -> String {
    format!(
        r#"{{
  "model": {{"type": "log_quadratic", "beta": 0.42, "J": {{"cycle": 5}}, "embeddings": [[-1.0], [1.0]]}},
  "kernel": {kernel}{extra}
}}"#
    )
}

#[test]
fn unknown_top_level_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &toy_config(r#"{"name": "pncg"}"#, r#", "stepz": 100"#),
    );
    let out = run(&["chain", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
    let err = stderr_of(&out);
    assert!(err.contains("unknown key \"stepz\""), "{err}");
    assert!(err.contains("accepted keys"), "{err}");
}

#[test]
fn unknown_kernel_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &toy_config(r#"{"name": "gwl", "stride": 2}"#, ""),
    );
    let out = run(&["chain", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("unknown key \"stride\""));
}

#[test]
fn non_positive_step_size_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &toy_config(r#"{"name": "pncg", "step_size": -1.0}"#, ""),
    );
    let out = run(&["chain", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn zero_steps_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &toy_config(r#"{"name": "rwm"}"#, r#", "steps": 0"#));
    let out = run(&["chain", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("at least 1"), "{}", stderr_of(&out));
}

#[test]
fn norm_exponent_below_one_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &toy_config(r#"{"name": "pncg", "norm_exponent": 0.5}"#, ""),
    );
    let out = run(&["chain", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr_of(&out));
}

#[test]
fn three_token_projection_study_reports_the_missing_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
  "model": {"type": "log_quadratic", "beta": 0.42, "J": {"cycle": 3}, "embeddings": [[-1.0], [0.0], [1.0]]},
  "kernel": {"name": "mucola"}
}"#,
    );
    let out = run(&[
        "toy-limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_of(&out);
    assert!(
        err.contains(
            "projection transition probabilities require exactly 2 tokens with \
             1-dimensional embeddings (got 3 tokens of dimension 1); the \
             crossing integral has no closed form otherwise"
        ),
        "{err}"
    );
}

#[test]
fn dense_coupling_matches_the_cycle_shorthand_byte_for_byte() {
    let tmp = tempfile::tempdir().unwrap();
    let dense = write_config(
        tmp.path(),
        r#"{
  "model": {"type": "log_quadratic", "beta": 0.42,
            "J": [0.0, 1.0, 0.0, 0.0, 1.0,
                  1.0, 0.0, 1.0, 0.0, 0.0,
                  0.0, 1.0, 0.0, 1.0, 0.0,
                  0.0, 0.0, 1.0, 0.0, 1.0,
                  1.0, 0.0, 0.0, 1.0, 0.0],
            "embeddings": [[-1.0], [1.0]]},
  "kernel": {"name": "pncg"},
  "alphas": [1.0, 0.5]
}"#,
    );
    let shorthand = tmp.path().join("shorthand.json");
    fs::write(&shorthand, toy_config(r#"{"name": "pncg"}"#, r#", "alphas": [1.0, 0.5]"#)).unwrap();

    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    assert!(run(&["toy-limit", "--config", dense.to_str().unwrap(), "--out", out_a.to_str().unwrap()])
        .status
        .success());
    assert!(run(&[
        "toy-limit",
        "--config",
        shorthand.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap()
    ])
    .status
    .success());
    assert_eq!(
        fs::read(out_a.join("toy_limit.csv")).unwrap(),
        fs::read(out_b.join("toy_limit.csv")).unwrap()
    );
}

#[test]
fn toy_limit_rows_cover_every_kernel_and_step_size() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &toy_config(r#"{"name": "pncg"}"#, r#", "alphas": [1.0, 0.5]"#),
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "toy-limit",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let csv = fs::read_to_string(out_dir.join("toy_limit.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# gradmcmc-cli v"));
    assert_eq!(lines.next().unwrap(), "kernel,alpha,tv_to_target");
    let labels: Vec<&str> = lines.map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(
        labels,
        [
            "mucola", "mucola", "pncg_unadjusted", "pncg_unadjusted", "pncg_mh", "pncg_mh",
            "gwl_mh", "gwl_mh", "rwm_mh", "rwm_mh"
        ]
    );
}

#[test]
fn chain_trace_rows_follow_the_documented_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &toy_config(r#"{"name": "gwl"}"#, r#", "steps": 40, "seeds": [9]"#),
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "chain",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));

    let trace = fs::read_to_string(out_dir.join("chain_gwl_seed9.jsonl")).unwrap();
    let rows: Vec<Value> = trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 41, "initial state plus one row per step");
    for (t, row) in rows.iter().enumerate() {
        assert_eq!(row["t"].as_u64().unwrap(), t as u64);
        assert!(row["energy"].is_f64() || row["energy"].is_i64());
        assert!(row["accepted"].is_boolean());
        assert!(row["changes"].as_u64().unwrap() <= 1, "single-position kernel");
        assert!(row.get("state").is_none(), "states only appear with --emit-states");
    }
    assert_eq!(rows[0]["accepted"], Value::Bool(true));
    assert_eq!(rows[0]["changes"].as_u64(), Some(0));

    let summary = fs::read_to_string(out_dir.join("chain_summary.csv")).unwrap();
    let data = summary.lines().nth(2).unwrap();
    assert!(data.starts_with("gwl,9,40,"), "{data}");
    assert!(data.ends_with(','), "no switch step outside the two-phase kernel: {data}");
}

#[test]
fn emit_states_adds_token_arrays_to_every_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &toy_config(r#"{"name": "rwm"}"#, r#", "steps": 12, "seeds": [4]"#),
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "chain",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--emit-states",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let trace = fs::read_to_string(out_dir.join("chain_rwm_seed4.jsonl")).unwrap();
    for line in trace.lines() {
        let row: Value = serde_json::from_str(line).unwrap();
        let state = row["state"].as_array().expect("state array with --emit-states");
        assert_eq!(state.len(), 5);
        assert!(state.iter().all(|v| matches!(v.as_u64(), Some(0 | 1))));
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &toy_config(
            r#"{"name": "pncg"}"#,
            r#", "steps": 200, "seeds": [11, 12]"#,
        ),
    );
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for dir in [&out_a, &out_b] {
        let out = run(&[
            "chain",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr_of(&out));
    }
    for name in ["chain_pncg_seed11.jsonl", "chain_pncg_seed12.jsonl", "chain_summary.csv"] {
        assert_eq!(
            fs::read(out_a.join(name)).unwrap(),
            fs::read(out_b.join(name)).unwrap(),
            "{name} differing between identical runs"
        );
    }
}

#[test]
fn seed_flag_order_does_not_change_the_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &toy_config(r#"{"name": "mucola"}"#, r#", "steps": 150"#),
    );
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    let base = ["chain", "--config", cfg.to_str().unwrap()];
    let mut args_a: Vec<&str> = base.to_vec();
    args_a.extend(["--seed", "5", "--seed", "3", "--out", out_a.to_str().unwrap()]);
    let mut args_b: Vec<&str> = base.to_vec();
    args_b.extend(["--seed", "3", "--seed", "5", "--out", out_b.to_str().unwrap()]);
    assert!(run(&args_a).status.success());
    assert!(run(&args_b).status.success());
    assert_eq!(
        fs::read(out_a.join("chain_summary.csv")).unwrap(),
        fs::read(out_b.join("chain_summary.csv")).unwrap()
    );
}

#[test]
fn duplicate_seed_flags_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&[
        "chain",
        "--seed",
        "8",
        "--seed",
        "8",
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("--seed 8 given twice"));
}

#[test]
fn two_phase_kernel_summary_records_its_switch_step() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &toy_config(
            r#"{"name": "hybrid", "hybrid": {"window": 40, "change_threshold": 1.2, "max_initial_steps": 500}}"#,
            r#", "steps": 800, "seeds": [2]"#,
        ),
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "chain",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let summary = fs::read_to_string(out_dir.join("chain_summary.csv")).unwrap();
    let fields: Vec<&str> = summary.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(fields[0], "hybrid");
    let switch: usize = fields[7].parse().expect("switch step recorded");
    assert!((1..=500).contains(&switch), "switched within the step budget, got {switch}");
}

#[test]
fn large_state_space_chain_runs_without_enumeration() {
    // 2^25 states dwarf any enumeration cap; the trace command never builds
    // the space, so this must succeed and stay energy-only.
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
  "model": {"type": "log_quadratic", "beta": 0.42, "J": {"cycle": 25}, "embeddings": [[-1.0], [1.0]]},
  "kernel": {"name": "pncg"},
  "steps": 60,
  "seeds": [1]
}"#,
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "chain",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--cap",
        "1000",
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    assert!(out_dir.join("chain_pncg_seed1.jsonl").exists());
}

#[test]
fn out_path_colliding_with_a_file_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("occupied");
    fs::write(&blocker, b"not a directory").unwrap();
    let cfg = write_config(tmp.path(), &toy_config(r#"{"name": "rwm"}"#, r#", "steps": 5"#));
    let out = run(&[
        "chain",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        blocker.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("no outputs were written"));
}

#[test]
fn mixing_report_lists_every_grid_pair_with_contained_spectra() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &toy_config(
            r#"{"name": "pncg"}"#,
            r#", "alphas": [1.0, 0.5], "epsilons": [0.25, 0.1]"#,
        ),
    );
    let out_dir = tmp.path().join("out");
    let out = run(&[
        "mixing",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr_of(&out));
    let doc: Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("mixing_report.json")).unwrap())
            .unwrap();
    let reports = doc["reports"].as_array().unwrap();
    let pairs: Vec<(f64, f64)> = reports
        .iter()
        .map(|r| (r["step_size"].as_f64().unwrap(), r["epsilon"].as_f64().unwrap()))
        .collect();
    assert_eq!(pairs, [(1.0, 0.25), (1.0, 0.1), (0.5, 0.25), (0.5, 0.1)]);
    for r in reports {
        assert_eq!(r["gershgorin_all_contained"], Value::Bool(true));
        assert!(r["mixing_time"]["steps"].as_u64().is_some());
    }
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = run(&["toy-tv", "--config", "/nonexistent/nowhere.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("nowhere.json"));
}
