use std::path::Path;
use std::process::{Command, Output};

const STORE: &str = r#"{
  "schema": "eitmem/1",
  "scenario": "store",
  "medium": { "od": 60, "gamma12_gamma13": 0.03, "omega_c_gamma13": 11 },
  "grid": { "t_start_ns": 0, "t_end_ns": 1000 },
  "waveform": { "kind": "gaussian", "center_ns": 150, "fwhm_ns": 50 },
  "schedule": { "storage_ns": 100, "ramp_ns": 50 }
}"#;

fn eitmem(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eitmem"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn negative_optical_depth_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), STORE.replace("\"od\": 60", "\"od\": -1")).unwrap();
    let out = eitmem(&["validate", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("medium.od must be ≥ 0"), "{}", stderr(&out));

    let run = eitmem(&["run", "bad.json", "--out", "o"], dir.path());
    assert_eq!(run.status.code(), Some(2));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn missing_waveform_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let text = STORE.replace(r#""waveform": { "kind": "gaussian", "center_ns": 150, "fwhm_ns": 50 },"#, "");
    std::fs::write(dir.path().join("c.json"), text).unwrap();
    let out = eitmem(&["validate", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("waveform"), "{}", stderr(&out));
}

#[test]
fn several_problems_are_reported_together() {
    let dir = tempfile::tempdir().unwrap();
    let text = STORE
        .replace("\"od\": 60", "\"od\": -1")
        .replace("\"gamma12_gamma13\": 0.03", "\"gamma12_gamma13\": -0.5");
    std::fs::write(dir.path().join("c.json"), text).unwrap();
    let out = eitmem(&["validate", "c.json"], dir.path());
    let err = stderr(&out);
    assert!(err.contains("medium.od") && err.contains("medium.gamma12_gamma13"), "{err}");
}

#[test]
fn valid_store_runs_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.json"), STORE).unwrap();
    let ok = eitmem(&["validate", "c.json"], dir.path());
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&ok.stdout).trim(), "ok");

    let out = eitmem(&["run", "c.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for name in ["manifest.json", "result.json", "psi_in.csv", "psi_out.csv"] {
        assert!(dir.path().join("o").join(name).is_file(), "{name}");
    }
    let csv = std::fs::read_to_string(dir.path().join("o/psi_out.csv")).unwrap();
    assert!(csv.starts_with("t_ns,re,im\n"));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = STORE
        .replace("\"scenario\": \"store\"", "\"scenario\": \"optimize\"")
        .replace("\"center_ns\": 150, \"fwhm_ns\": 50", "\"center_ns\": 900, \"fwhm_ns\": 20")
        .replace("\"storage_ns\": 100", "\"t_off_ns\": 100, \"storage_ns\": 100");
    let text = text.replacen('{', "{ \"optimize\": {},", 1);
    std::fs::write(dir.path().join("c.json"), text).unwrap();
    assert_eq!(eitmem(&["validate", "c.json"], dir.path()).status.code(), Some(0));
    let out = eitmem(&["run", "c.json", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn presets_list_and_copy() {
    let dir = tempfile::tempdir().unwrap();
    let list = eitmem(&["preset", "list"], dir.path());
    assert_eq!(list.status.code(), Some(0));
    let text = String::from_utf8_lossy(&list.stdout);
    assert!(text.contains("optimal-storage-a") && text.contains("heralded-counts"));

    let copy = eitmem(&["preset", "copy", "slow-light", "--to", "s.json"], dir.path());
    assert_eq!(copy.status.code(), Some(0));
    assert_eq!(eitmem(&["validate", "s.json"], dir.path()).status.code(), Some(0));

    let unknown = eitmem(&["preset", "copy", "no-such-preset"], dir.path());
    assert_ne!(unknown.status.code(), Some(0));
    assert!(stderr(&unknown).contains("slow-light"));
}

#[test]
fn repeated_counts_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    assert!(eitmem(&["preset", "copy", "heralded-counts", "--to", "c.json"], dir.path()).status.success());
    for out in ["a", "b"] {
        let run = eitmem(&["run", "c.json", "--out", out, "--seed", "11"], dir.path());
        assert!(run.status.success(), "{}", stderr(&run));
    }
    for name in ["summary.json", "counts.json", "hist_12.csv", "hist_13.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let other = eitmem(&["run", "c.json", "--out", "c", "--seed", "12"], dir.path());
    assert!(other.status.success());
    assert_ne!(
        std::fs::read(dir.path().join("a/hist_12.csv")).unwrap(),
        std::fs::read(dir.path().join("c/hist_12.csv")).unwrap()
    );
}
