use std::path::{Path, PathBuf};
use std::process::Command;

use railqubo::cli::{sidecar_path, EXIT_INFEASIBLE, EXIT_INPUT, EXIT_OK};
use railqubo::load::{load_instance, parse_instance};
use railqubo::qubo_io::{coefficient_map, read_qubo, sidecar, Sidecar};
use railqubo_core::fixture;
use railqubo_core::qubo::{assemble, PenaltyOverrides};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn demo_text() -> String {
    std::fs::read_to_string(data("demo.toml")).unwrap()
}

/// Runs the binary and returns (exit code, stdout, stderr).
fn railqubo(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_railqubo"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn write_temp(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn loaded_files_match_the_fixtures() {
    assert_eq!(load_instance(&data("demo.toml")).unwrap(), fixture::demo());
    assert_eq!(
        load_instance(&data("demo-rerouted.toml")).unwrap(),
        fixture::demo_rerouted()
    );
}

#[test]
fn validate_accepts_the_demo() {
    let (code, out, _) = railqubo(&[
        "validate",
        "--instance",
        data("demo.toml").to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("ok"), "{out}");
}

#[test]
fn negative_durations_are_rejected_with_a_position() {
    let text = demo_text().replace("pass = 4,", "pass = -4,");
    let err = parse_instance(&text, None).unwrap_err();
    let d = err.diagnostics();
    assert_eq!(d.len(), 1, "{err}");
    assert_eq!(d[0].line, Some(35));
    assert!(d[0].message.contains("nonnegative"), "{}", d[0].message);

    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(&dir, "neg.toml", &text);
    let (code, _, stderr) = railqubo(&["validate", "--instance", &path]);
    assert_eq!(code, EXIT_INPUT);
    assert!(stderr.contains("line 35:"), "{stderr}");
}

#[test]
fn off_grid_times_name_the_grid() {
    let text = demo_text().replace("pass = 4,", "pass = 4.5,");
    let err = parse_instance(&text, None).unwrap_err();
    let d = err.diagnostics();
    assert_eq!(d.len(), 1, "{err}");
    assert_eq!(d[0].line, Some(35));
    assert!(d[0].message.contains("grid"), "{}", d[0].message);
    // Half minutes fit a grid of two points per minute.
    assert!(parse_instance(&text, Some(2)).is_ok());
}

#[test]
fn unknown_keys_and_several_errors_are_all_listed() {
    let text = demo_text()
        .replace("res_default = 1", "res_default = 1\nheadway = 3")
        .replace("pass = 8, track = \"2\"", "pass = -8, track = \"2\"")
        .replace(
            "weight = 1.0\nd_max = 10\nstops = [\n  { station = \"s2\"",
            "weight = 1.0\nd_max = 10\nstops = [\n  { station = \"s9\"",
        );
    let err = parse_instance(&text, None).unwrap_err();
    let all = err.to_string();
    assert!(err.diagnostics().len() >= 3, "{all}");
    assert!(all.contains("headway"), "{all}");
    assert!(all.contains("nonnegative"), "{all}");
    assert!(all.contains("s9"), "{all}");
}

#[test]
fn usage_errors_exit_with_input_code() {
    let (code, _, _) = railqubo(&["solve", "--mode", "linear"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _, _) = railqubo(&["solve", "--instance", "x.toml", "--mode", "quantum"]);
    assert_eq!(code, EXIT_INPUT);
    let demo = data("demo.toml");
    let (code, _, stderr) = railqubo(&[
        "solve",
        "--instance",
        demo.to_str().unwrap(),
        "--mode",
        "qubo-brute",
        "--p-sum",
        "-1",
    ]);
    assert_eq!(code, EXIT_INPUT);
    assert!(stderr.contains("p-sum"), "{stderr}");
    let (code, _, _) = railqubo(&["validate", "--instance", "/nonexistent/demo.toml"]);
    assert_eq!(code, EXIT_INPUT);
}

#[test]
fn an_infeasible_solve_exits_with_its_own_code() {
    // Without slack j2 cannot leave the single track in time for j1.
    let text = demo_text().replace("d_max = 10", "d_max = 0");
    let dir = tempfile::tempdir().unwrap();
    let path = write_temp(&dir, "tight.toml", &text);
    let (code, out, _) = railqubo(&["solve", "--instance", &path, "--mode", "linear"]);
    assert_eq!(code, EXIT_INFEASIBLE, "{out}");
    assert!(out.contains("feasible: false"), "{out}");
}

#[test]
fn linear_solve_reports_the_demo_objective() {
    let (code, out, _) = railqubo(&[
        "solve",
        "--instance",
        data("demo.toml").to_str().unwrap(),
        "--mode",
        "linear",
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("objective: 0.5"), "{out}");
}

#[test]
fn exported_qubo_round_trips_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rerouted.qubo");
    let (code, _, stderr) = railqubo(&[
        "export-qubo",
        "--instance",
        data("demo-rerouted.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{stderr}");

    let (inst, routing) = fixture::demo_rerouted();
    let model = assemble(&inst, &routing, &PenaltyOverrides::default()).unwrap();
    let file = read_qubo(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(file.qubo.n, model.qubo.n);
    assert_eq!(coefficient_map(&file.qubo), coefficient_map(&model.qubo));
    assert_eq!(file.qubo.offset.to_bits(), model.qubo.offset.to_bits());
    assert_eq!(
        file.header.p_sum.map(f64::to_bits),
        Some(model.params.p_sum.to_bits())
    );
    assert_eq!(
        file.header.floor.map(f64::to_bits),
        Some(model.floor.to_bits())
    );

    let vars: Sidecar =
        serde_json::from_str(&std::fs::read_to_string(sidecar_path(&out)).unwrap()).unwrap();
    assert_eq!(vars, sidecar(&model, &inst));
    assert_eq!(vars.n, model.qubo.n);
    let x = vars
        .variables
        .iter()
        .filter(|v| matches!(v, railqubo::qubo_io::VarRecord::X { .. }))
        .count();
    // Five departures, each with eleven one-minute slots.
    assert_eq!(x, 55);
}

#[test]
fn annealing_reports_repeat_for_a_seed() {
    let demo = data("demo.toml");
    let args = [
        "solve",
        "--instance",
        demo.to_str().unwrap(),
        "--mode",
        "qubo-anneal",
        "--seed",
        "5",
        "--sweeps",
        "2000",
        "--restarts",
        "4",
        "--structured",
    ];
    let first = railqubo(&args);
    let second = railqubo(&args);
    assert_eq!(first, second);
    let report: serde_json::Value = serde_json::from_str(&first.1).unwrap();
    assert_eq!(report["solver"]["seed"], 5);
    assert_eq!(report["solver"]["restarts"], 4);
}

#[test]
fn hybrid_log_records_each_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.json");
    let (code, out, _) = railqubo(&[
        "solve",
        "--instance",
        data("demo.toml").to_str().unwrap(),
        "--mode",
        "hybrid",
        "--threshold",
        "0.4",
        "--log",
        log.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("terminated: satisfied"), "{out}");
    let entries: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&log).unwrap()).unwrap();
    let entries = entries.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert!((entries[0]["objective"].as_f64().unwrap() - 0.5).abs() < 1e-9);
    assert!((entries[1]["objective"].as_f64().unwrap() - 0.3).abs() < 1e-9);
}
