//! Black-box checks of the command-line contract: exit codes, validation
//! reporting, output routing, figure catalog layout, and the promise that a
//! stored resolved config reproduces its run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn ferrosim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ferrosim"))
        .args(args)
        .env_remove("FERROSIM_OUT")
        .output()
        .expect("spawn ferrosim")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn test_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ferrosim_cli_{}_{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).expect("create test dir");
    dir
}

fn dir_contents(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(dir: &Path, base: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in std::fs::read_dir(dir).expect("read dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(&path, base, out);
            } else {
                let name =
                    path.strip_prefix(base).expect("relative path").to_string_lossy().into_owned();
                out.insert(name, std::fs::read(&path).expect("read file"));
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn validate_accepts_default_config() {
    let dir = test_dir("validate_ok");
    let cfg = dir.join("empty.toml");
    std::fs::write(&cfg, "").expect("write config");
    let out = ferrosim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "OK");
}

#[test]
fn validate_lists_every_violation() {
    let dir = test_dir("validate_bad");
    let cfg = dir.join("bad.toml");
    std::fs::write(
        &cfg,
        "[device.stack]\nd_wox = -1.0\n\n[device.ensemble]\nmean_v_up = -2.0\nmean_v_down = 1.0\n",
    )
    .expect("write config");
    let out = ferrosim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let report = stdout(&out);
    assert!(report.contains("device.stack"), "stack violation missing from:\n{report}");
    assert!(report.contains("device.ensemble"), "ensemble violation missing from:\n{report}");
}

#[test]
fn validate_requires_config_flag() {
    let out = ferrosim(&["validate"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = test_dir("unknown_key");
    let cfg = dir.join("typo.toml");
    std::fs::write(&cfg, "[device.stack]\nd_wocks = 8.0\n").expect("write config");
    let out = ferrosim(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(
        stdout(&out).contains("d_wocks"),
        "message does not name the bad key:\n{}",
        stdout(&out)
    );
}

#[test]
fn unknown_experiment_lists_choices() {
    let dir = test_dir("unknown_experiment");
    let out = ferrosim(&["run", "frobnicate", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let msg = stderr(&out);
    assert!(msg.contains("pv-loop") && msg.contains("metrics"), "choices not listed:\n{msg}");
}

#[test]
fn unknown_figure_is_a_config_error() {
    let dir = test_dir("unknown_figure");
    let out = ferrosim(&["figures", "fig9", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("fig5"), "known figures not listed:\n{}", stderr(&out));
}

#[test]
fn input_flag_applies_only_to_metrics() {
    let dir = test_dir("input_gate");
    let out = ferrosim(&["run", "pv-loop", "--input", "x.csv", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--input"), "gate message missing:\n{}", stderr(&out));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = test_dir("missing_config");
    let out = ferrosim(&[
        "run",
        "pund",
        "--config",
        "/nonexistent/nowhere.toml",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unreadable_input_is_a_runtime_error() {
    let dir = test_dir("runtime_error");
    let out = ferrosim(&[
        "run",
        "metrics",
        "--input",
        "/nonexistent/pulses.csv",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("runtime error"), "stderr: {}", stderr(&out));
}

#[test]
fn output_root_env_var_is_honored() {
    let dir = test_dir("env_root");
    let out = Command::new(env!("CARGO_BIN_EXE_ferrosim"))
        .args(["run", "pund", "--quiet"])
        .env("FERROSIM_OUT", &dir)
        .output()
        .expect("spawn ferrosim");
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(dir.join("pund").join("pund.csv").is_file());
    assert!(dir.join("pund").join("resolved.toml").is_file());
    assert!(dir.join("pund").join("manifest.json").is_file());
}

#[test]
fn json_format_prints_the_manifest() {
    let dir = test_dir("json_manifest");
    let out =
        ferrosim(&["run", "pund", "--format", "json", "--quiet", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let manifest: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("manifest JSON");
    assert_eq!(manifest["experiment"], "pund");
    assert!(manifest["config_hash"].as_str().is_some_and(|h| h.len() == 16));
}

#[test]
fn quiet_silences_the_metrics_report() {
    let dir = test_dir("quiet_metrics");
    let out = ferrosim(&["run", "metrics", "--quiet", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(stdout(&out).is_empty(), "expected silent stdout, got:\n{}", stdout(&out));
}

#[test]
fn stored_config_reproduces_the_run() {
    let root = test_dir("stored_config");
    let a = root.join("a");
    let b = root.join("b");
    let first =
        ferrosim(&["run", "rv-hysteresis", "--seed", "5", "--quiet", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    let stored = a.join("rv-hysteresis").join("resolved.toml");
    let second = ferrosim(&[
        "run",
        "rv-hysteresis",
        "--config",
        stored.to_str().unwrap(),
        "--quiet",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(code(&second), 0, "stderr: {}", stderr(&second));
    let fa = dir_contents(&a);
    let fb = dir_contents(&b);
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (name, bytes) in &fa {
        assert!(fb[name] == *bytes, "{name} differs between the original and the replayed run");
    }
}

#[test]
fn fig5_emits_six_panels() {
    let root = test_dir("fig5");
    let out = ferrosim(&["figures", "fig5", "--quiet", "--out", root.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let dir = root.join("figures").join("fig5");
    let mut csvs: Vec<String> = std::fs::read_dir(&dir)
        .expect("figure dir")
        .map(|e| e.expect("entry").file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    csvs.sort();
    assert_eq!(
        csvs,
        ["cycles.csv", "gpr.csv", "pulses.csv", "residuals.csv", "sf.csv", "snr.csv"],
        "fig5 panel set is wrong"
    );
    assert!(dir.join("resolved.toml").is_file());
    assert!(dir.join("manifest.json").is_file());
    assert!(root.join("figures").join("index.json").is_file());
}

#[test]
fn figure_catalog_completes_quickly() {
    let root = test_dir("figures_all");
    let t0 = Instant::now();
    let out = ferrosim(&["figures", "all", "--quiet", "--out", root.to_str().unwrap()]);
    let dt = t0.elapsed().as_secs_f64();
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    assert!(dt < 60.0, "figure catalog took {dt:.1} s, budget 60 s");

    let index: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(root.join("figures").join("index.json")).expect("index"),
    )
    .expect("index JSON");
    let figures = index["figures"].as_array().expect("figure list");
    assert_eq!(figures.len(), 14);
    for fig in figures {
        let name = fig["name"].as_str().expect("figure name");
        assert!(
            root.join("figures").join(name).join("manifest.json").is_file(),
            "{name} missing its manifest"
        );
    }
}
