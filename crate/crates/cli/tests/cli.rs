use std::path::Path;
use std::process::{Command, Output};

fn fwmsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fwmsim"))
        .args(args)
        .current_dir(cwd)
        .env_remove("FWMSIM_OUT_DIR")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn dump(name: &str, cwd: &Path) -> String {
    let o = fwmsim(&["--dump-preset", name], cwd);
    assert!(o.status.success());
    String::from_utf8(o.stdout).unwrap()
}

#[test]
fn unknown_key_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = dump("fig5a", dir.path()).replace("alpha =", "alhpa =");
    std::fs::write(dir.path().join("bad.toml"), text).unwrap();
    let o = fwmsim(&["--config", "bad.toml", "--out-dir", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alhpa"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn all_violations_reported_together() {
    let dir = tempfile::tempdir().unwrap();
    let text = dump("fig5a", dir.path())
        .replace("alpha = 4.0", "alpha = -1.0")
        .replace("samples = 4096", "samples = 100");
    std::fs::write(dir.path().join("bad.toml"), text).unwrap();
    let o = fwmsim(&["--config", "bad.toml", "--out-dir", "out"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let msg = stderr(&o);
    assert!(msg.contains("filter.alpha"), "{msg}");
    assert!(msg.contains("grid.samples"), "{msg}");
}

#[test]
fn leaking_pulse_is_numerical_failure_without_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = dump("fig5a", dir.path()).replace("t_a_us = 15.0", "t_a_us = 0.5");
    std::fs::write(dir.path().join("leak.toml"), text).unwrap();
    let o = fwmsim(&["--config", "leak.toml", "--out-dir", "out"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unwritable_directory_is_io_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = fwmsim(&["--preset", "fig2b", "--out-dir", "/dev/null/out"], dir.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn dumped_preset_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("fig5a.toml"), dump("fig5a", dir.path())).unwrap();
    assert!(
        fwmsim(&["--preset", "fig5a", "--out-dir", "a", "--format", "csv"], dir.path())
            .status
            .success()
    );
    assert!(fwmsim(
        &["--config", "fig5a.toml", "--out-dir", "b", "--format", "csv"],
        dir.path()
    )
    .status
    .success());
    let a = std::fs::read(dir.path().join("a/fig5a_traces.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/fig5a_traces.csv")).unwrap();
    assert!(a == b);
}

#[test]
fn every_format_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = fwmsim(
        &["--preset", "fig2a", "--out-dir", "out", "--format", "csv,json,svg"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = std::fs::read_dir(dir.path().join("out"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    for ext in [".csv", ".json", ".svg"] {
        assert!(names.iter().any(|n| n.ends_with(ext)), "no {ext} in {names:?}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/fig2a_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["task"], "spectrum");
    let svg = names.iter().find(|n| n.ends_with(".svg")).unwrap();
    assert!(std::fs::read_to_string(dir.path().join("out").join(svg))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn unknown_format_and_missing_source_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        fwmsim(&["--preset", "fig2a", "--format", "png"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(fwmsim(&[], dir.path()).status.code(), Some(2));
    assert_eq!(fwmsim(&["--preset", "fig9"], dir.path()).status.code(), Some(2));
}
