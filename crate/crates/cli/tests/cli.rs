use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_robinucq"));
    c.env_remove("ROBINUCQ_THREADS");
    c
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().expect("binary runs")
}

fn manifest(out: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

fn ok(args: &[&str], out: &Path) -> serde_json::Value {
    let o = run(args, out);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    manifest(out)
}

#[test]
fn solve_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let spec = config("disk.toml");
    let m = ok(&["solve", "--spec", spec.to_str().unwrap()], dir.path());
    assert_eq!(m["status"], "ok");
    assert_eq!(m["outputs"], serde_json::json!(["nodal.csv", "boundary.csv", "summary.json"]));
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    let nodal = fs::read_to_string(dir.path().join("nodal.csv")).unwrap();
    assert!(nodal.starts_with("node,x,y,u\n"));
    // 17 significant digits
    let first = nodal.lines().nth(1).unwrap();
    let x = first.split(',').nth(1).unwrap();
    assert_eq!(x.split('e').next().unwrap().trim_start_matches('-').len(), 18, "{x}");
    let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let (a, b) = (s["robin_flux"].as_f64().unwrap(), s["neumann_flux"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-12));
}

#[test]
fn mesh_flags_refine() {
    let dir = tempfile::tempdir().unwrap();
    let spec = config("square_aniso.toml");
    let count = |extra: &[&str], sub: &str| {
        let out = dir.path().join(sub);
        let mut args = vec!["mesh", "--spec", spec.to_str().unwrap()];
        args.extend_from_slice(extra);
        ok(&args, &out);
        let s: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        s["nodes"].as_u64().unwrap()
    };
    let coarse = count(&[], "a");
    let fine = count(&["--refine", "1"], "b");
    let same = count(&["--mesh-h", "0.05"], "c");
    assert!(fine > 3 * coarse);
    assert_eq!(fine, same);
}

#[test]
fn hardy_conjugate_maps_cos_to_sin() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["hardy", "conjugate", "--series", config("cosine.series").to_str().unwrap()], dir.path());
    let text = fs::read_to_string(dir.path().join("conjugate.series")).unwrap();
    for line in text.lines() {
        let f: Vec<f64> = line.split_whitespace().map(|x| x.parse().unwrap()).collect();
        let expected_im = match f[0] as i64 {
            1 => -0.5,
            -1 => 0.5,
            _ => 0.0,
        };
        assert!(f[1].abs() < 1e-15 && (f[2] - expected_im).abs() < 1e-15, "{line}");
    }
}

#[test]
fn noisy_runs_are_reproducible_and_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let spec = config("quarter.toml");
    let args = ["invert", "recover", "--spec", spec.to_str().unwrap(), "--noise", "0.01"];
    let read = |sub: &str, seed: &str| {
        let out = dir.path().join(sub);
        let mut a = args.to_vec();
        a.extend_from_slice(&["--seed", seed]);
        ok(&a, &out);
        fs::read(out.join("lambda.csv")).unwrap()
    };
    let a = read("a", "3");
    let b = read("b", "3");
    let c = read("c", "4");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(manifest(&dir.path().join("a"))["seed"], 3);
}

#[test]
fn invert_suite_has_one_row_per_case() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["invert", "suite", "--config", config("suite.toml").to_str().unwrap()], dir.path());
    let csv = fs::read_to_string(dir.path().join("report.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("case_id,gap,recovery_err,masked_fraction,verdict"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = bin().args(["solve", "--bogus"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    let o = bin().args(["frobnicate"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn input_errors_exit_one_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["solve", "--spec", "/nonexistent/robin.toml"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let m = manifest(dir.path());
    assert_eq!(m["status"], "error");
    assert_eq!(m["exit_code"], 1);

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[domain]\nkind = \"regular\"\nsides = 2\n").unwrap();
    let o = run(&["conformal", "fit", "--spec", bad.to_str().unwrap()], &dir.path().join("b"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = config("disk.toml");
    let o = run(&["invert", "complete", "--spec", spec.to_str().unwrap(), "--alpha", "0", "--degree", "40"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(manifest(dir.path())["exit_code"], 2);
}

#[test]
fn thread_cap_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let spec = config("disk.toml");
    let o = bin()
        .env("ROBINUCQ_THREADS", "2")
        .args(["mesh", "--spec", spec.to_str().unwrap(), "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(manifest(dir.path())["threads"], 2);
    let o = bin().env("ROBINUCQ_THREADS", "zero").args(["mesh", "--spec", spec.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn every_subcommand_runs_on_bundled_configs() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let c = |n: &str| config(n).to_str().unwrap().to_string();
    let map = d.join("fit").join("map.txt");
    let map = map.to_str().unwrap().to_string();
    let cases: Vec<(&str, Vec<String>)> = vec![
        ("mesh", vec!["mesh".into(), "--spec".into(), c("disk.toml")]),
        ("solve", vec!["solve".into(), "--spec".into(), c("disk.toml")]),
        ("factorize", vec!["factorize".into(), "--spec".into(), c("disk.toml")]),
        ("probe", vec!["probe-continuation".into(), "--spec".into(), c("disk.toml")]),
        ("rolle", vec!["rolle".into(), "--spec".into(), c("disk.toml")]),
        ("conj", vec!["hardy".into(), "conjugate".into(), "--series".into(), c("cosine.series")]),
        ("outer", vec!["hardy".into(), "outer".into(), "--series".into(), c("exp_cos.series")]),
        ("ha2", vec!["hardy".into(), "a2".into(), "--series".into(), c("exp_cos.series")]),
        ("fit", vec!["conformal".into(), "fit".into(), "--spec".into(), c("lshape.toml")]),
        ("eval", vec!["conformal".into(), "eval".into(), "--map".into(), map.clone()]),
        ("ca2", vec!["conformal".into(), "a2".into(), "--map".into(), map]),
        ("mu1", vec!["iso".into(), "mu1".into(), "--spec".into(), c("square_aniso.toml")]),
        ("iso", vec!["iso".into(), "solve".into(), "--spec".into(), c("square_aniso.toml")]),
        ("push", vec!["iso".into(), "pushforward".into(), "--spec".into(), c("square_aniso.toml")]),
        ("complete", vec!["invert".into(), "complete".into(), "--spec".into(), c("disk.toml")]),
        ("recover", vec!["invert".into(), "recover".into(), "--spec".into(), c("disk.toml")]),
        (
            "gap",
            vec!["invert".into(), "gap".into(), "--spec".into(), c("disk.toml"), "--other".into(), c("disk_other.toml")],
        ),
        ("suite", vec!["suite".into()]),
    ];
    for (name, args) in cases {
        let start = Instant::now();
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let m = ok(&refs, &d.join(name));
        assert!(start.elapsed() < Duration::from_secs(60), "{name} took {:?}", start.elapsed());
        assert!(!m["outputs"].as_array().unwrap().is_empty(), "{name}");
    }
    let gap: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("gap/summary.json")).unwrap()).unwrap();
    assert_eq!(gap["exceeds_floor"], true);
    let push: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("push/summary.json")).unwrap()).unwrap();
    assert!(push["det_discrepancy"].as_f64().unwrap() < 1e-10);
    let suite: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("suite/summary.json")).unwrap()).unwrap();
    assert_eq!(suite["beltrami"]["route"], "beltrami");
}
