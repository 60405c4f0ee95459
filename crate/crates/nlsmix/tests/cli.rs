use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nlsmix(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nlsmix"))
        .args(args)
        .current_dir(cwd)
        .env_remove("NLS_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn envelope(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("envelope.json")).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validation_errors_exit_2_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    for args in [
        &["scan", "--N", "2", "--t", "1"][..],
        &["scan", "--q", "7", "--t", "1"],
        &["scan", "--t", "-1"],
        &["confine", "--nodes", "64"],
        &["frobnicate"],
        &["--config", "missing.cfg"],
    ] {
        let o = nlsmix(&[args, &["--out", "out"]].concat(), tmp.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn solver_errors_exit_3_and_still_write_the_envelope() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nlsmix(&["ground-state", "--t", "50", "--d-lo", "10", "--d-hi", "20", "--out", "e", "--no-cache"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
    let env = envelope(&tmp.path().join("e"));
    assert_eq!(env["command"], "ground-state");
    assert_eq!(env["errors"].as_array().unwrap().len(), 1);
    assert!(env["records"]["ground_state"].is_null());
}

#[test]
fn unwritable_output_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("file"), "").unwrap();
    let o = nlsmix(&["verify", "--out", "file/sub"], tmp.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn scan_writes_tables_and_a_complete_envelope() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nlsmix(&["scan", "--q", "3", "--t", "100", "--out", "s", "--no-cache", "--threads", "2"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let dir = tmp.path().join("s");
    let env = envelope(&dir);
    for key in ["schema_version", "command", "config", "input_hash", "records", "errors", "warnings", "tables", "stats"] {
        assert!(env.get(key).is_some(), "{key}");
    }
    assert_eq!(env["schema_version"], 1);
    assert_eq!(env["input_hash"].as_str().unwrap().len(), 64);
    assert_eq!(env["stats"]["threads"], 2);
    let tables: Vec<&str> = env["tables"].as_array().unwrap().iter().map(|t| t.as_str().unwrap()).collect();
    assert_eq!(tables, ["solutions.csv", "profile_0.csv", "profile_1.csv", "scan.csv"]);
    for t in tables {
        assert!(dir.join(t).is_file(), "{t}");
    }
    let csv = fs::read_to_string(dir.join("solutions.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    // Every number carries seventeen significant digits.
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert!(row.iter().any(|c| c.contains('e') && c.split('e').next().unwrap().len() == 18), "{row:?}");
}

#[test]
fn config_file_supplies_defaults_and_flags_override_it() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("run.cfg"), "# scan at large coupling\ncommand = scan\nq = 3\nt = 100\nno_cache = true\n").unwrap();
    let a = nlsmix(&["--config", "run.cfg", "--out", "a"], tmp.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = nlsmix(&["--config", "run.cfg", "--t", "200", "--out", "b"], tmp.path());
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(envelope(&tmp.path().join("a"))["config"]["t"], 100.0);
    assert_eq!(envelope(&tmp.path().join("b"))["config"]["t"], 200.0);
    assert!(!tmp.path().join(".nlsmix-cache").exists());

    fs::write(tmp.path().join("bad.cfg"), "command = scan\nthis line has no separator\n").unwrap();
    assert_eq!(nlsmix(&["--config", "bad.cfg"], tmp.path()).status.code(), Some(2));
}

#[test]
fn cache_directory_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("env-cache");
    let run = |out: &str| {
        Command::new(env!("CARGO_BIN_EXE_nlsmix"))
            .args(["scan", "--q", "3", "--t", "100", "--out", out])
            .current_dir(tmp.path())
            .env("NLS_CACHE_DIR", &cache)
            .output()
            .unwrap()
    };
    assert_eq!(run("first").status.code(), Some(0));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    assert_eq!(run("second").status.code(), Some(0));
    let (a, b) = (envelope(&tmp.path().join("first")), envelope(&tmp.path().join("second")));
    assert_eq!((a["stats"]["cache_misses"].as_u64(), a["stats"]["cache_hits"].as_u64()), (Some(1), Some(0)));
    assert_eq!((b["stats"]["cache_misses"].as_u64(), b["stats"]["cache_hits"].as_u64()), (Some(0), Some(1)));
    assert_eq!(a["records"], b["records"]);
    assert_eq!(
        fs::read(tmp.path().join("first/profile_1.csv")).unwrap(),
        fs::read(tmp.path().join("second/profile_1.csv")).unwrap()
    );
}

#[test]
fn corrupt_cache_entries_are_recomputed_with_a_warning() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["scan", "--q", "3", "--t", "100", "--cache-dir", "c", "--out", "o"];
    assert_eq!(nlsmix(&args, tmp.path()).status.code(), Some(0));
    let entry = fs::read_dir(tmp.path().join("c")).unwrap().next().unwrap().unwrap().path();
    fs::write(&entry, "{ not json").unwrap();
    assert_eq!(nlsmix(&args, tmp.path()).status.code(), Some(0));
    let env = envelope(&tmp.path().join("o"));
    assert_eq!(env["warnings"].as_array().unwrap().len(), 1);
    assert_eq!(env["stats"]["cache_misses"], 1);
}

#[test]
fn reduce_reports_nonexistence_above_the_supremum() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["reduce", "--q", "2.5", "--mu", "1e3", "--t-min", "1", "--t-max", "100", "--points", "16", "--out", "r"];
    let o = nlsmix(&args, tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("nonexistence at this μ"), "{}", stdout(&o));
    let env = envelope(&tmp.path().join("r"));
    assert_eq!(env["records"]["nonexistence"], true);
    assert!(env["records"]["solutions"].as_array().unwrap().is_empty());
}

#[test]
fn verify_passes_every_check() {
    let tmp = tempfile::tempdir().unwrap();
    let o = nlsmix(&["verify", "--out", "v"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(!out.contains("FAIL"), "{out}");
    assert_eq!(envelope(&tmp.path().join("v"))["records"]["failed"], 0);
}
