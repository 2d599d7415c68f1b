use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ucplab(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucplab"))
        .args(args)
        .env("UCPLAB_RUNS", root.join("runs"))
        .current_dir(root)
        .output()
        .expect("spawn ucplab")
}

fn ok(root: &Path, args: &[&str]) -> Output {
    let out = ucplab(root, args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn outputs(m: &Value) -> Vec<String> {
    m["outputs"].as_array().unwrap().iter().map(|o| o["path"].as_str().unwrap().to_string()).collect()
}

fn runs(root: &Path) -> Vec<PathBuf> {
    let mut v: Vec<_> = fs::read_dir(root.join("runs")).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn empty_lambda_list_writes_a_valid_manifest() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("empty.json");
    fs::write(&cfg, r#"{ "lambda_list": [] }"#).unwrap();
    let out = t.path().join("run");
    ok(t.path(), &["threeball", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let m = manifest(&out);
    assert_eq!(m["command"], "threeball");
    assert!(m["failures"].as_array().unwrap().is_empty());
    assert_eq!(m["inputs"].as_array().unwrap().len(), 1);
    let csv = fs::read_to_string(out.join("threeball.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1);
    assert!(csv.starts_with("seed,lambda,n,"));
}

#[test]
fn threeball_is_deterministic() {
    let t = TempDir::new().unwrap();
    let args = ["threeball", "--lambdas", "1,2", "--seeds", "1", "--n", "64", "--out"];
    let mut bytes = vec![];
    for name in ["a", "b"] {
        let dir = t.path().join(name);
        let mut a = args.to_vec();
        a.push(dir.to_str().unwrap());
        ok(t.path(), &a);
        bytes.push(fs::read(dir.join("threeball.csv")).unwrap());
        let m = manifest(&dir);
        assert_eq!(m["seeds"], serde_json::json!([1]));
        assert_eq!(m["grid_sizes"], serde_json::json!([64]));
    }
    assert_eq!(bytes[0], bytes[1]);
    let csv = String::from_utf8(bytes.pop().unwrap()).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().skip(1).all(|l| l.contains(",true,")));
}

#[test]
fn verify_passes_and_an_injected_fault_fails() {
    let t = TempDir::new().unwrap();
    let out = ok(t.path(), &["verify"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("[PASS]") && !stdout.contains("[FAIL]"), "{stdout}");

    let out = ucplab(t.path(), &["verify", "--inject-fault", "curl-sign"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));

    let reports: Vec<Value> = runs(t.path())
        .iter()
        .map(|d| serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap())
        .collect();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports.iter().filter(|r| r["passed"] == true).count(), 1);
    assert!(runs(t.path()).iter().any(|d| d.join("kernel_mass.csv").exists()));
}

#[test]
fn landis_symbolic_schedule_reaches_the_expected_step() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("landis");
    ok(t.path(), &["landis", "--symbolic", "--alpha0", "2", "--S0", "100", "--out", out.to_str().unwrap()]);
    let mut r = csv::Reader::from_path(out.join("landis.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 44);
    assert_eq!(&rows.last().unwrap()[0], "43");
    for row in &rows {
        let alpha: f64 = row[3].parse().unwrap();
        let closed: f64 = row[4].parse().unwrap();
        assert!((alpha - closed).abs() <= 1e-12 * closed.abs().max(1.0));
        assert_eq!(&row[7], "true");
    }
    let cert: Value = serde_json::from_str(&fs::read_to_string(out.join("certificate.json")).unwrap()).unwrap();
    assert_eq!(cert["n_final"], 43);
}

#[test]
fn pipeline_chain_runs_end_to_end() {
    let t = TempDir::new().unwrap();
    let p = t.path();
    let dir = |s: &str| p.join(s).to_str().unwrap().to_string();
    ok(p, &["gen", "--seed", "5", "--lambda", "2", "--n", "48", "--out", &dir("pot")]);
    ok(p, &["solve", "--seed", "5", "--potential", &dir("pot"), "--out", &dir("sol")]);
    ok(p, &["multiplier", "--potential", &dir("pot"), "--out", &dir("mul")]);
    ok(p, &["stream", "--u", &dir("sol"), "--multiplier", &dir("mul"), "--out", &dir("str")]);

    let gen = manifest(&p.join("pot"));
    assert_eq!(gen["seeds"], serde_json::json!([5]));
    assert_eq!(gen["grid_sizes"], serde_json::json!([48]));
    assert!(outputs(&gen).contains(&"v_plus.ucpf".to_string()));

    let solve = manifest(&p.join("sol"));
    assert!(!solve["inputs"].as_array().unwrap().is_empty());

    let cert: Value = serde_json::from_str(&fs::read_to_string(p.join("mul/certificate.json")).unwrap()).unwrap();
    assert!(cert.is_object());
    let stream = outputs(&manifest(&p.join("str")));
    for f in ["stream/w1.ucpf", "stream/w2.ucpf", "stream/stream.json"] {
        assert!(stream.contains(&f.to_string()), "{f} missing from {stream:?}");
    }
}

#[test]
fn beltrami_sweep_writes_one_row_per_sample() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("sweep");
    ok(t.path(), &["beltrami", "--sweep", "2,4", "--samples", "2", "--n", "32", "--out", out.to_str().unwrap()]);
    let mut r = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let log_sum: f64 = row[6].parse().unwrap();
        assert!(log_sum.is_finite() && log_sum >= 2f64.ln() - 1e-9);
    }
}

#[test]
fn report_flags_modified_outputs() {
    let t = TempDir::new().unwrap();
    let run = t.path().join("landis");
    ok(t.path(), &["landis", "--symbolic", "--alpha0", "2", "--S0", "100", "--out", run.to_str().unwrap()]);
    let rep = ok(t.path(), &["report", run.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&rep.stdout).unwrap();
    assert!(v[0]["modified"].as_array().unwrap().is_empty());
    assert_eq!(v[0]["tables"]["landis.csv"]["last_alpha"][0], 43);

    let mut csv = fs::read_to_string(run.join("landis.csv")).unwrap();
    csv.push_str("tampered\n");
    fs::write(run.join("landis.csv"), csv).unwrap();
    let rep = ok(t.path(), &["report", run.to_str().unwrap()]);
    let v: Value = serde_json::from_slice(&rep.stdout).unwrap();
    assert_eq!(v[0]["modified"], serde_json::json!(["landis.csv"]));
    assert_eq!(v[0]["unreadable"], serde_json::json!(["landis.csv"]));
}

#[test]
fn runs_default_under_the_environment_root_and_never_reuse_a_directory() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["landis", "--symbolic", "--alpha0", "2", "--S0", "100"]);
    ok(t.path(), &["landis", "--symbolic", "--alpha0", "2", "--S0", "100"]);
    let dirs = runs(t.path());
    assert_eq!(dirs.len(), 2);
    assert!(dirs.iter().all(|d| d.file_name().unwrap().to_str().unwrap().starts_with("landis-")));
    assert!(dirs.iter().all(|d| d.join("manifest.json").exists()));

    let again = ucplab(t.path(), &["landis", "--symbolic", "--out", dirs[0].to_str().unwrap()]);
    assert_eq!(again.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&again.stderr).contains("already holds a run"));
}

#[test]
fn invalid_configuration_is_rejected() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("bad.json");
    fs::write(&cfg, r#"{ "lambda_list": [0.5] }"#).unwrap();
    let out = ucplab(t.path(), &["threeball", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    fs::write(&cfg, r#"{ "lambdas": [1] }"#).unwrap();
    let out = ucplab(t.path(), &["threeball", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
