use std::process::{Command, Output};

use cocorl::cmdp::{write_cmdp, CmdpDocument, FeatureExpectations, TabularCmdp};
use cocorl::cocorl::{sample_bound_exact, traj_bound_eps_safety};
use cocorl::experiment::{read_results, CSV_HEADER};

fn cocorl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cocorl")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bound_exact_delegates_to_the_library() {
    let o = cocorl(&["bound", "exact", "--delta", "0.1", "--d", "2", "--n", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let expect = sample_bound_exact(0.1, 2, 4).unwrap();
    assert!(stdout(&o).contains(&format!("k={expect}")), "{}", stdout(&o));
    assert!(stdout(&o).contains("delta=0.1 d=2 n=4"));
}

#[test]
fn bound_traj_matches_reference_value() {
    let o = cocorl(&["bound", "traj", "--delta", "0.05", "--d", "4", "--n", "2", "--k", "10", "--eps", "0.1", "--gamma", "0.9"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(traj_bound_eps_safety(4, 2, 10, 0.05, 0.1, 0.9).unwrap(), 11983);
    assert!(stdout(&o).contains("n_traj=11983"));
}

#[test]
fn bound_estimated_and_boltzmann_print_counts() {
    let o = cocorl(&["bound", "estimated", "--delta", "0.1", "--d", "3", "--n", "5", "--eps", "0.1", "--gamma", "0.9"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("k=") && stdout(&o).contains("n_traj="));
    let o = cocorl(&["bound", "boltzmann", "--delta", "0.1", "--d", "2", "--n", "4", "--beta", "1", "--gamma", "0"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_with_one() {
    let o = cocorl(&["bound", "exact", "--delta", "0.1", "--d", "2"]);
    assert_eq!(o.status.code(), Some(1));
    let o = cocorl(&["bound", "exact", "--delta", "1.5", "--d", "2", "--n", "4"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("delta"));
    assert_eq!(cocorl(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cocorl(&["--help"]).status.code(), Some(0));
}

#[test]
fn run_writes_results_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    let out = dir.path().join("res.csv");
    std::fs::write(&config, "setting = \"single-env\"\nmethods = [\"cocorl\"]\nk_schedule = [1, 2]\nseeds = 2\nn_eval_rewards = 2\n").unwrap();
    let o = cocorl(&["run", config.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
    let rows = read_results(&out).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.constraint_violation <= 1e-6));
    assert!(dir.path().join("res_summary.csv").exists());
}

#[test]
fn runtime_failures_exit_with_two() {
    let o = cocorl(&["run", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "polytope\nnonsense\n").unwrap();
    assert_eq!(cocorl(&["inspect-polytope", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn invalid_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    std::fs::write(&config, "k_schedule = []\n").unwrap();
    assert_eq!(cocorl(&["run", config.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn inspect_safe_set_from_cmdp_and_reread() {
    let dir = tempfile::tempdir().unwrap();
    let doc = CmdpDocument {
        cmdp: TabularCmdp::with_indicator_features(1, 3, vec![1.0; 3], vec![1.0], 0.0).unwrap(),
        constraints: vec![],
        demos: vec![
            FeatureExpectations::exact(vec![1.0, 0.0, 0.0]),
            FeatureExpectations::exact(vec![0.0, 1.0, 0.0]),
            FeatureExpectations::exact(vec![0.0, 0.0, 1.0]),
        ],
    };
    let cmdp_path = dir.path().join("m.cmdp");
    std::fs::write(&cmdp_path, write_cmdp(&doc)).unwrap();
    let poly = dir.path().join("s.poly");
    let o = cocorl(&["inspect-polytope", cmdp_path.to_str().unwrap(), "--write", poly.to_str().unwrap(), "--contains", "0.2,0.3,0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert!(s.contains("effective dimension: 2"), "{s}");
    assert!(s.contains("contains: true"), "{s}");

    let o = cocorl(&["inspect-polytope", poly.to_str().unwrap(), "--contains", "0.5,0.5,0.5"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("contains: false"));
    assert!(stdout(&o).contains("dimension: 3"));
}
