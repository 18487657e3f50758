use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dunkl_lab::config::CATALOG;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dunkl-lab"))
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_into(config: &Path, out: &Path) -> Output {
    bin()
        .arg("run")
        .arg(config)
        .env("DUNKL_LAB_OUTPUT_DIR", out)
        .output()
        .expect("binary runs")
}

fn read_dir(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("cfg.json");
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn rank1_heat_passes_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let cfg = bundled("rank1_heat.json");
    let first = run_into(&cfg, &a);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stdout));
    let second = run_into(&cfg, &b);
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(normalized(&first.stdout, &a), normalized(&second.stdout, &b));

    let files_a = read_dir(&a);
    let files_b = read_dir(&b);
    assert_eq!(files_a, files_b, "reports differ between runs");

    let reports: Vec<_> = files_a.keys().filter(|k| k.ends_with(".json")).collect();
    assert_eq!(reports.len(), 6, "{reports:?}");

    let stdout = String::from_utf8(first.stdout).unwrap();
    let hash = stdout
        .lines()
        .find_map(|l| l.strip_prefix("config_hash "))
        .expect("hash line")
        .to_string();
    assert_eq!(hash.len(), 64);
    for (name, body) in &files_a {
        let text = String::from_utf8(body.clone()).unwrap();
        if name.ends_with(".json") {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["config_hash"], hash.as_str(), "{name}");
            for key in ["check", "params", "pass", "margin", "fitted", "grid", "runtime_s"] {
                assert!(v.get(key).is_some(), "{name} lacks {key}");
            }
            assert_eq!(v["pass"], true, "{name}");
        } else {
            assert!(text.starts_with(&format!("# config_hash: {hash}\n")), "{name}");
        }
    }
    let kernel = files_a
        .iter()
        .find(|(k, _)| k.ends_with("-kernel.csv"))
        .map(|(_, v)| String::from_utf8(v.clone()).unwrap())
        .expect("kernel table");
    assert_eq!(kernel.lines().nth(1), Some("x1,y1,t,value,error_estimate"));
    assert!(files_a.contains_key("fitted.csv") && files_a.contains_key("plot_data.csv"));
}

/// stdout with the output directory masked.
fn normalized(stdout: &[u8], dir: &Path) -> String {
    String::from_utf8_lossy(stdout).replace(&*dir.to_string_lossy(), "<out>")
}

#[test]
fn unknown_key_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
  "system": { "type": "rank-one", "k": 0.0 },
  "checks": [ { "check": "heat-oracle", "foo": 1 } ]
}"#,
    );
    let out = run_into(&cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("foo") && err.contains("line 3"), "{err}");
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn positivity_violation_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
  "system": { "type": "rank-one", "k": 1.0 },
  "kernel": { "directions": [[1.0]], "ell": 1, "eps": 1.5, "t": 1.0 },
  "checks": [ { "check": "kernel-export" } ]
}"#,
    );
    let out = run_into(&cfg, &tmp.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("symbol positivity violated"), "{err}");
}

#[test]
fn failed_check_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        r#"{
  "system": { "type": "rank-one", "k": 0.0 },
  "checks": [ { "check": "thm1-decay", "params": { "ell": 2 } } ]
}"#,
    );
    let dir = tmp.path().join("out");
    let out = run_into(&cfg, &dir);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    let report = fs::read_to_string(dir.join("00-thm1-decay.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(v["pass"], false);
}

#[test]
fn list_checks_names_every_kind() {
    let out = bin().arg("list-checks").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for c in CATALOG {
        assert!(text.lines().any(|l| l == c.name), "{}", c.name);
    }
    assert!(text.contains("\nthm1-decay\n") && text.contains("\ngarding\n"));
    assert!(text.ends_with(&format!("{} check kinds\n", CATALOG.len())));
}

#[test]
fn version_prints_crate_version() {
    let out = bin().arg("version").output().unwrap();
    assert!(out.status.success());
    assert_eq!(
        String::from_utf8(out.stdout).unwrap(),
        format!("dunkl-lab {}\n", env!("CARGO_PKG_VERSION"))
    );
}

#[test]
fn missing_config_is_a_config_error() {
    let out = bin().arg("run").arg("/nonexistent/cfg.json").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}
