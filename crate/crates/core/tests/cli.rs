use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn netcorrupt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netcorrupt")).args(args).output().expect("spawn netcorrupt")
}

fn run_in(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    netcorrupt(&args)
}

fn report(dir: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

/// star_leaf with the support threshold replaced.
fn star_with_tau(dir: &Path, tau: f64) -> PathBuf {
    let base = std::fs::read_to_string(configs().join("star_leaf.cfg")).unwrap();
    let text = base + &format!("\n[support]\ntau = {tau}\n");
    let p = dir.join("star.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn run_writes_all_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = star_with_tau(tmp.path(), 0.08);
    let out = tmp.path().join("out");
    let o = run_in("run", &cfg, &out, &["--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["report.json", "scores.csv", "recovered.dot", "predicted.dot"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let r = report(&out);
    assert_eq!(r["mode"], "run");
    let csv = std::fs::read_to_string(out.join("scores.csv")).unwrap();
    assert_eq!(csv.lines().count(), 8);
}

#[test]
fn reports_are_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = star_with_tau(tmp.path(), 0.08);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run_in("run", &cfg, &a, &["--threads", "1"]).status.code(), Some(0));
    assert_eq!(run_in("run", &cfg, &b, &["--threads", "3"]).status.code(), Some(0));
    assert_eq!(report(&a), report(&b));
    let c = tmp.path().join("c");
    run_in("run", &cfg, &c, &["--seed", "7"]);
    assert_ne!(report(&a)["scores"], report(&c)["scores"]);
}

#[test]
fn violations_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    // a near-zero threshold keeps every noisy pair, most of them outside the prediction
    let cfg = star_with_tau(tmp.path(), 1e-6);
    let o = run_in("run", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn analytic_and_mrf_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("a");
    let o = run_in("analytic", &configs().join("chain_node2.cfg"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert!(r["woodbury"]["max_rel_deviation"].as_f64().unwrap() < 1e-8);

    let out = tmp.path().join("m");
    let o = run_in("mrf", &configs().join("mrf_chain.cfg"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(report(&out)["mode"], "mrf");
}

#[test]
fn validate_config() {
    let o = netcorrupt(&["validate-config", "--config", configs().join("chain.cfg").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok "));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.cfg");
    std::fs::write(&bad, "seed = 1\n[system]\nnodes = 2\narcs = [{ from = 1, to = 9 }]\n").unwrap();
    let o = netcorrupt(&["validate-config", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));

    let o = netcorrupt(&["validate-config", "--config", "/nonexistent.cfg"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn export_dot_to_stdout_and_dir() {
    let cfg = configs().join("star_hub.cfg");
    let o = netcorrupt(&["export-dot", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let dot = String::from_utf8(o.stdout).unwrap();
    assert!(dot.starts_with("graph"));
    assert_eq!(dot.matches("dashed").count(), 15);

    let tmp = tempfile::tempdir().unwrap();
    let o = run_in("export-dot", &cfg, tmp.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(tmp.path().join("predicted.dot")).unwrap(), dot);
}
