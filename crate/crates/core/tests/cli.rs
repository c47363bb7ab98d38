use std::path::Path;
use std::process::{Command, Output};

fn muskat(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(args)
        .current_dir(dir)
        .env_remove("MUSKAT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_writes_versioned_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"params":{"sigma":0.4},"grid":{"n":128},"stepper":{"horizon":0.05},"output":{"snapshots":"binary"}}"#,
    );
    let out = muskat(&["simulate", "--config", &cfg, "--out", "run"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let run = dir.path().join("run");
    let csv = std::fs::read_to_string(run.join("norms.csv")).unwrap();
    let mut lines = csv.lines();
    let first = lines.next().unwrap();
    assert!(first.starts_with("# muskat ") && first.contains("layout=1") && first.contains("config_sha256="));
    assert!(lines.next().unwrap().starts_with("t,gamma,"));
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["termination"], "horizon");
    assert!(run.join("norms_norms.svg").exists());
    let snap = std::fs::read(run.join("snapshots/snapshot_00000.bin")).unwrap();
    let state = muskat_core::experiments::output::decode_snapshot(&snap).unwrap();
    assert_eq!(state.h.len(), 128);
}

#[test]
fn env_var_sets_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"params":{"sigma":0.4},"grid":{"n":128},"stepper":{"horizon":0.02}}"#);
    let out = Command::new(env!("CARGO_BIN_EXE_muskat"))
        .args(["simulate", "--config", &cfg])
        .current_dir(dir.path())
        .env("MUSKAT_OUT_DIR", dir.path().join("from_env"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from_env/summary.json").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        ("unknown.json", r#"{"colour":"blue"}"#),
        ("grid.json", r#"{"grid":{"n":6}}"#),
        ("dens.json", r#"{"params":{"rho0":1.0,"rho1":0.5,"rho2":2.0}}"#),
        ("syntax.json", "{"),
    ] {
        let cfg = write(dir.path(), name, text);
        let out = muskat(&["simulate", "--config", &cfg, "--out", "o"], dir.path());
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(!out.stderr.is_empty());
    }
    let out = muskat(&["simulate", "--config", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn twophase_rejects_distinct_interfaces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", "{}");
    let out = muskat(&["twophase", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn linear_requires_small_single_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"profile":{"gamma0":0.1,"f":[{"kind":"mode","amplitude":0.1,"mode":1}]}}"#,
    );
    let out = muskat(&["linear", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_and_assertion_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = muskat(&["verify", "--samples", "2000", "--seed", "3", "--out", "v"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let records: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("v/verify.json")).unwrap()).unwrap();
    assert!(records.as_array().unwrap().iter().all(|r| r["pass"] == true));

    // A tolerance no rounding error can meet turns the identity suites into failures.
    let cfg = write(dir.path(), "strict.json", r#"{"verify":{"samples":500,"tolerance":1e-30}}"#);
    let out = muskat(&["verify", "--config", &cfg, "--out", "v2"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn positivity_outside_regime_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", r#"{"verify":{"samples":1000,"w0":0.5}}"#);
    let out = muskat(&["verify", "--config", &cfg, "--out", "v"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("out_of_regime"), "{stdout}");
}

#[test]
fn zero_samples_warn() {
    let dir = tempfile::tempdir().unwrap();
    let out = muskat(&["verify", "--samples", "0", "--out", "v"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("zero samples"));
}

#[test]
fn plot_reports_bad_rows() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "n.csv", "# c\nt,gamma,hk_h,hk_theta,diss,energy\n0,0.1,1,1,1,2\n1,0.09,0.5,0.5,0.5,1\n");
    let out = muskat(&["plot", &good], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("n_norms.svg").exists());

    let bad = write(dir.path(), "b.csv", "t,gamma,hk_h,hk_theta,diss,energy\n0,0.1,1,1,1,2\n1,x,0.5,0.5,0.5,1\n");
    let out = muskat(&["plot", &bad], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row 3"));

    let missing = write(dir.path(), "m.csv", "t,gamma\n0,0.1\n");
    let out = muskat(&["plot", &missing], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing column"));
}
