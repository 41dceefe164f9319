use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ionnode(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ionnode"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_json(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

const SMALL_RUN: &str = r#"{
    "seed": 7,
    "attempts_per_setting": 400,
    "analysis": { "monte_carlo_replicates": 50, "optimizer_starts": 2, "displacement_grid_um": [0.0, 0.2] }
}"#;

#[test]
fn simulate_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.json"), SMALL_RUN).unwrap();
    for out in ["a", "b"] {
        stdout_json(&ionnode(
            &["simulate", "--config", "run.json", "--out", out],
            dir.path(),
        ));
    }
    let names: Vec<_> = fs::read_dir(dir.path().join("a"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert!(names.len() >= 12);
    for name in names {
        let a = fs::read(dir.path().join("a").join(&name)).unwrap();
        let b = fs::read(dir.path().join("b").join(&name)).unwrap();
        assert!(a == b, "{name:?} differs between identical runs");
    }

    // Re-analysing the written logs reproduces the tomography outputs.
    let summary = stdout_json(&ionnode(
        &[
            "analyze",
            "--clicks",
            "a/clicks.csv",
            "--outcomes",
            "a/outcomes.csv",
            "--config",
            "run.json",
            "--out",
            "c",
        ],
        dir.path(),
    ));
    assert_eq!(summary["attempts"], 3600);
    for name in [
        "count_table.csv",
        "histogram.csv",
        "tomography.json",
        "fidelity.csv",
        "concurrence.csv",
    ] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let c = fs::read(dir.path().join("c").join(name)).unwrap();
        assert!(a == c, "{name} differs after re-analysis");
    }

    let report = stdout_json(&ionnode(&["report", "--artifacts", "a"], dir.path()));
    assert_eq!(report["verified"], true);
    assert_eq!(report["seed"], 7);

    // Tampering with a listed file is caught.
    fs::write(dir.path().join("a/fidelity.csv"), "tampered\n").unwrap();
    let err = stderr_json(&ionnode(&["report", "--artifacts", "a"], dir.path()));
    assert!(err["error"]["kind"].is_string());
}

#[test]
fn shuttle_writes_waveform_trajectory_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("steps.csv"), "v_volts\n4.45\n3.90\n").unwrap();
    let s = stdout_json(&ionnode(
        &[
            "shuttle",
            "--steps-file",
            "steps.csv",
            "--tp-us",
            "20",
            "--extra-cutoff-khz",
            "40",
            "--travel-um",
            "5.4",
            "--out",
            "sh",
        ],
        dir.path(),
    ));
    assert_eq!(s["steps"], 1);
    let a = s["a_com_um"].as_f64().unwrap();
    assert!(a > 0.0 && a < 0.1, "A_com {a}");
    assert!(s["extra_filter"]["reduction"].as_f64().unwrap() > 1.0);
    for f in ["waveform.csv", "trajectory.csv", "summary.json"] {
        assert!(dir.path().join("sh").join(f).exists(), "{f} missing");
    }
    let wave = fs::read_to_string(dir.path().join("sh/waveform.csv")).unwrap();
    assert!(wave.starts_with("t_us,v_volts\n"));
}

#[test]
fn fits_read_named_columns() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("xi.csv"),
        "ion,P_measured,P_exit\n1,0.10,0.25\n2,0.08,0.20\n",
    )
    .unwrap();
    let xi = stdout_json(&ionnode(&["fit", "xi", "--in", "xi.csv"], dir.path()));
    assert!((xi["xi"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert!((xi["xi_max"].as_f64().unwrap() - 0.4767).abs() < 1e-3);

    let mut ramsey = String::from("t_ms,contrast\n");
    for k in 0..12 {
        let t = k as f64;
        ramsey += &format!("{t},{}\n", (-t * t / (2.0 * 5.5 * 5.5)).exp());
    }
    fs::write(dir.path().join("ramsey.csv"), ramsey).unwrap();
    let r = stdout_json(&ionnode(
        &["fit", "ramsey", "--in", "ramsey.csv"],
        dir.path(),
    ));
    assert!((r["sigma_ms"].as_f64().unwrap() - 5.5).abs() < 1e-6);

    fs::write(dir.path().join("v.csv"), "z_um,v_volts\n0,0\n3,1\n6,2\n").unwrap();
    let v = stdout_json(&ionnode(&["fit", "voltage", "--in", "v.csv"], dir.path()));
    assert!((v["gradient_nm_per_mv"].as_f64().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn errors_are_json_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let e = stderr_json(&ionnode(&["fit", "xi", "--in", "missing.csv"], dir.path()));
    assert_eq!(e["error"]["kind"], "invalid_input");

    fs::write(dir.path().join("bad.csv"), "ion,P_measured\n1,0.1\n").unwrap();
    let e = stderr_json(&ionnode(&["fit", "xi", "--in", "bad.csv"], dir.path()));
    assert!(e["error"]["message"].as_str().unwrap().contains("P_exit"));

    fs::write(dir.path().join("cfg.json"), r#"{"xi": 1.5}"#).unwrap();
    let e = stderr_json(&ionnode(
        &["simulate", "--config", "cfg.json", "--out", "o"],
        dir.path(),
    ));
    assert_eq!(e["error"]["kind"], "validation");

    fs::write(dir.path().join("cfg.json"), r#"{"unknown_key": 1}"#).unwrap();
    let e = stderr_json(&ionnode(
        &["simulate", "--config", "cfg.json", "--out", "o"],
        dir.path(),
    ));
    assert_eq!(e["error"]["kind"], "validation");

    let out = ionnode(&["simulate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "usage");

    assert!(ionnode(&["--help"], dir.path()).status.success());
}

#[test]
fn analyze_rejects_mismatched_logs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("clicks.csv"),
        "attempt_index,setting_id,window_index,detector_channel,time_in_window_us\n5,0,1,0,3.0\n",
    )
    .unwrap();
    fs::write(
        dir.path().join("outcomes.csv"),
        "attempt_index,setting_id,ion_1\n0,0,0\n",
    )
    .unwrap();
    let e = stderr_json(&ionnode(
        &[
            "analyze",
            "--clicks",
            "clicks.csv",
            "--outcomes",
            "outcomes.csv",
            "--out",
            "o",
        ],
        dir.path(),
    ));
    assert_eq!(e["error"]["kind"], "join_failure");
}
