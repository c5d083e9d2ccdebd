use std::path::Path;
use std::process::{Command, Output};

fn orderk(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orderk")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn decimal_tau_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = orderk(&["gen", "perturbed", "--tau", "0.2", "-o", "p.json"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("p.json").exists());
}

#[test]
fn dry_run_prints_normalized_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = orderk(&["--dry-run", "counterexample", "--k", "7", "--eps", "2/200"], dir.path());
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["command"]["command"], "counterexample");
    assert_eq!(v["command"]["eps"], "1/100");
    assert_eq!(v["command"]["k"], 7);
}

#[test]
fn del_on_square_lattice_needs_generic_input() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&orderk(&["gen", "zsquare", "-o", "z.json"], dir.path())), 0);
    let o = orderk(&["tiling", "-i", "z.json", "--structure", "del", "--k", "2", "--json", "t.json"], dir.path());
    assert_eq!(code(&o), 6);
    let o = orderk(&["tiling", "-i", "z.json", "--structure", "bri", "--k", "2", "--json", "t.json"], dir.path());
    assert_eq!(code(&o), 0);
}

#[test]
fn uniform_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&orderk(&["gen", "uniform", "--n", "15", "--seed", "4", "-o", "u.json"], d)), 0);

    let o = orderk(&["angles", "-i", "u.json", "--structure", "vor", "--k", "2"], d);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("structure,k,depth,kind,value"));
    assert!(csv.lines().skip(1).all(|l| l.starts_with("vor,2,")));

    let o = orderk(&["tiling", "-i", "u.json", "--structure", "igl", "--k", "3", "--json", "t.json", "--svg", "t.svg"], d);
    assert_eq!(code(&o), 0);
    let t: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("t.json")).unwrap()).unwrap();
    assert!(!t["tiles"].as_array().unwrap().is_empty());
    assert!(std::fs::read_to_string(d.join("t.svg")).unwrap().contains("<svg"));

    let o = orderk(&["check", "--suite", "duality", "-i", "u.json", "--k", "3"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(code(&orderk(&["check", "--suite", "monotonicity", "-i", "u.json"], d)), 2);
    assert_eq!(code(&orderk(&["check", "--suite", "oracle", "--n", "12", "--k", "2"], d)), 0);
}

#[test]
fn extremes_on_periodic_set() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&orderk(&["gen", "periodic", "--n0", "20", "--copies", "3", "--seed", "2", "-o", "p.json"], d)), 0);
    let o = orderk(&["--threads", "2", "extremes", "-i", "p.json", "--k-min", "2", "--k-max", "5", "--structures", "del,bri", "-o", "e.csv"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(d.join("e.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 4);
    let o = orderk(&["check", "--suite", "monotonicity", "-i", "p.json", "--k", "5"], d);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn window_too_small_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&orderk(&["gen", "zsquare", "--copies", "3", "-o", "z.json"], d)), 0);
    let o = orderk(&["extremes", "-i", "z.json", "--k-min", "2", "--k-max", "30"], d);
    assert_eq!(code(&o), 5);
}

#[test]
fn counterexample_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = orderk(&["counterexample", "--k", "6", "--seed", "1", "-o", "r.json"], dir.path());
    assert_eq!(code(&o), 0);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("r.json")).unwrap()).unwrap();
    assert_eq!(r["pass"], true);
    assert!(r["omega_del_k"].as_f64().unwrap() > r["omega_del_k1"].as_f64().unwrap());
}
