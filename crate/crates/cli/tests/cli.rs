use std::path::Path;
use std::process::Command;

fn hdclt(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hdclt")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn steincheck_writes_csv_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write(tmp.path(), "c.toml", "reps = 20000\n");
    let r = hdclt(&["steincheck", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(out.join("stein_check.csv")).unwrap();
    assert!(csv.starts_with("law,function,nodes,lhs,rhs,residual\n"));
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["master_seed"], 3);
    assert_eq!(m["experiment"], "stein_check");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    assert!(m["outputs"].as_array().unwrap().iter().any(|v| v == "multiplier_moments.csv"));
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.toml", "no_such_key = 1\n");
    assert_eq!(hdclt(&["simulate", "--config", &bad]).status.code(), Some(2));
    let small_d = write(tmp.path(), "d.toml", "[d_rule]\nkind = \"fixed\"\nd = 2\n");
    assert_eq!(hdclt(&["simulate", "--config", &small_d]).status.code(), Some(2));
    let missing = tmp.path().join("missing.toml");
    assert_eq!(hdclt(&["bounds", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(hdclt(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn budget_overrun_exits_3_before_writing() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write(tmp.path(), "b.toml", "[budget]\nmax_entries = 1000.0\n");
    let r = hdclt(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
    assert!(!out.exists());
    let rare = write(tmp.path(), "r.toml", "reps = 1000\nx_grid = [5.0]\n");
    assert_eq!(hdclt(&["cramer", "--config", &rare]).status.code(), Some(3));
}

#[test]
fn bounds_are_byte_identical_across_runs_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.toml", "n_grid = [200]\n[d_rule]\nkind = \"fixed\"\nd = 30\n");
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(hdclt(&["bounds", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]).status.success());
    assert!(hdclt(&["bounds", "--config", &cfg, "--out", b.to_str().unwrap(), "--threads", "2"]).status.success());
    for f in ["bound_report.json", "bound_report.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn small_simulate_is_thread_invariant() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.toml",
        "n_grid = [20, 80]\nreps = 3000\nreference_reps = 3000\nrectangles = 50\n[d_rule]\nkind = \"fixed\"\nd = 5\n",
    );
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(hdclt(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap(), "--threads", "1"]).status.success());
    assert!(hdclt(&["simulate", "--config", &cfg, "--out", b.to_str().unwrap(), "--threads", "3"]).status.success());
    let ta = std::fs::read_to_string(a.join("convergence_sweep.csv")).unwrap();
    assert_eq!(ta, std::fs::read_to_string(b.join("convergence_sweep.csv")).unwrap());
    assert!(ta.starts_with("n,d,reps,ks_max,ks_se,ks_reference,rect_distance"));
    assert_eq!(ta.lines().count(), 3);
}
