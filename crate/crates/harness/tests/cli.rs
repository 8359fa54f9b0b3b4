use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

use frontspread_harness::dispatch::sha256_hex;

const BASE: &str = r#"
schema_version = 1
[model]
type = "competition"
a = [1.0, 1.0]
b = [1.0, 1.0]
c = [0.5, 0.5]
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], env: Option<(&str, &str)>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_frontspread"));
    cmd.args(args);
    if let Some((k, v)) = env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn invoke(kind: &str, config: &str) -> (TempDir, Output) {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "exp.toml", config);
    let out = dir.path().join("out");
    let o = run(
        &[kind, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()],
        None,
    );
    (dir, o)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn check_manifest(out: &Path) -> Value {
    let rec = json(&out.join("run.json"));
    for e in rec["outputs"].as_array().unwrap() {
        let bytes = std::fs::read(out.join(e["path"].as_str().unwrap())).unwrap();
        assert_eq!(e["sha256"].as_str().unwrap(), sha256_hex(&bytes));
    }
    rec
}

#[test]
fn eigen_writes_lambda() {
    let cfg = format!("{BASE}[eigen]\ninterval = [0.0, 2.0]\nn_eig = 128\n");
    let (dir, o) = invoke("eigen", &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    let e = json(&out.join("eigen.json"));
    let lambda = e["lambda"].as_f64().unwrap();
    assert!(lambda > 0.0 && lambda < 1.0, "{lambda}");
    let csv = std::fs::read_to_string(out.join("eigenfunction.csv")).unwrap();
    assert_eq!(csv.lines().count(), 129);
    let rec = check_manifest(&out);
    assert_eq!(rec["exit_code"], 0);
    assert_eq!(rec["kind"], "eigen");
}

#[test]
fn simulate_benchmark_outputs() {
    let cfg = format!(
        "{BASE}[grid]\ndx = 0.05\n[initial]\nh0 = 2.0\n[solver]\nt_final = 3.0\n[outputs]\nsnapshot_every = 20\n"
    );
    let (dir, o) = invoke("simulate", &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    let mut lines = traj.lines();
    assert_eq!(lines.next(), Some("t,g,h,gprime,hprime,mass1,mass2,max1,max2"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 9);
    assert_eq!(first[2], "2.0000000000000000e0");
    let summary = json(&out.join("summary.json"));
    assert!(summary["classification"]["verdict"].is_string());
    assert!(summary["prediction"]["MustSpread"].is_object());
    let rec = check_manifest(&out);
    let snaps = rec["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["path"].as_str().unwrap().starts_with("snapshots/"))
        .count();
    assert!(snaps >= 2);
    let echo = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echo.contains("picard_tol"));
}

#[test]
fn mu_sweep_undetermined_persists_partial() {
    // Too short a horizon to classify anything.
    let cfg = BASE.replace("a = [1.0, 1.0]", "a = [0.5, 0.5]")
        + "[grid]\ndx = 0.05\n[initial]\nh0 = 0.18\n[solver]\nt_final = 0.5\n[sweep]\nbudget = 2\n";
    let (dir, o) = invoke("mu-sweep", &cfg);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let out = dir.path().join("out");
    let s = json(&out.join("mu_sweep.json"));
    assert!(!s["runs"].as_array().unwrap().is_empty());
    assert_eq!(json(&out.join("run.json"))["status"], "undetermined");
}

#[test]
fn critical_length_reports_always_positive() {
    let cfg = BASE.replace("a = [1.0, 1.0]", "a = [1.0, 0.5]");
    let (dir, o) = invoke("critical-length", &cfg);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let c = json(&dir.path().join("out/critical_length.json"));
    assert_eq!(c["status1"], "ALWAYS_POSITIVE");
    assert_eq!(c["status"], "ALWAYS_POSITIVE");
    assert!(c["ell_star"].is_null());
    let l2 = c["l2"].as_f64().unwrap();
    assert!((l2 - 0.6308).abs() < 1e-3, "{l2}");
}

#[test]
fn asymptotics_sequences() {
    let (dir, o) = invoke("asymptotics", BASE);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let a = json(&dir.path().join("out/asymptotics.json"));
    assert!(a["limit_error"].as_f64().unwrap() < 1e-12);
    assert_eq!(a["monotone"], true);
    let csv = std::fs::read_to_string(dir.path().join("out/sequences.csv")).unwrap();
    assert!(csv.starts_with("i,upper_a,lower_b\n"));
}

#[test]
fn config_errors_exit_two() {
    let cases = [
        (BASE.replace("b = [1.0, 1.0]", "b = [-1.0, 1.0]"), "b1"),
        (format!("{BASE}[solver]\ndt = 0.5\n"), "dt·Λ·exp(2Λ·dt) <= 1/2"),
        (format!("{BASE}[solver]\ntfinal = 2.0\n"), "tfinal"),
        (
            format!("{BASE}[kernel]\nfamily = \"tabulated\"\npath = \"missing.csv\"\n"),
            "missing.csv",
        ),
        (
            BASE.replace("schema_version = 1", "schema_version = 7"),
            "schema_version",
        ),
    ];
    for (cfg, needle) in cases {
        let (_dir, o) = invoke("simulate", &cfg);
        assert_eq!(o.status.code(), Some(2), "{needle}");
        assert!(stderr(&o).contains(needle), "{needle}: {}", stderr(&o));
    }
}

#[test]
fn kind_mismatch_and_thread_env() {
    let cfg = BASE.replace("schema_version = 1", "schema_version = 1\nkind = \"eigen\"");
    let (_dir, o) = invoke("simulate", &cfg);
    assert_eq!(o.status.code(), Some(2));
    let dir = TempDir::new().unwrap();
    let p = write(dir.path(), "exp.toml", BASE);
    let o = run(
        &["asymptotics", "--config", p.to_str().unwrap()],
        Some(("FRONTSPREAD_THREADS", "zero")),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = run(
        &["asymptotics", "--config", p.to_str().unwrap()],
        Some(("FRONTSPREAD_THREADS", "2")),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // Default output directory is relative to the config file.
    assert!(dir.path().join("out/run.json").exists());
}

#[test]
fn verify_quick_passes() {
    let (dir, o) = invoke("verify", BASE);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]")).count(), 5);
    let v = json(&dir.path().join("out/verify.json"));
    assert_eq!(v["checks"].as_array().unwrap().len(), 5);
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            frontspread_harness::load_config(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 5);
}
