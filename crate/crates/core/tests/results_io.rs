use cocorl::experiment::{emit_results, mean_stderr, read_results, summarize, summary_path, Method, ResultRow, Setting, CSV_HEADER};

fn row(seed: u64, k: usize, ret: f64, viol: f64) -> ResultRow {
    ResultRow {
        seed,
        k,
        method: Method::CoCoRl,
        setting: Setting::SingleEnv,
        normalized_return: ret,
        constraint_violation: viol,
        fallback_used: seed == 0,
        wall_ms: 1.5,
        error: None,
    }
}

#[test]
fn rows_survive_a_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("results.csv");
    let rows = vec![row(0, 1, 0.25, 0.0), row(1, 1, 0.75, 0.0), row(0, 2, 1.0, 0.125)];
    let summary = emit_results(&rows, &path).unwrap();
    assert_eq!(summary, dir.path().join("results_summary.csv"));
    assert_eq!(summary_path(&path), summary);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().next().unwrap(), CSV_HEADER);
    let back = read_results(&path).unwrap();
    assert_eq!(back.len(), rows.len());
    for (a, b) in back.iter().zip(&rows) {
        assert_eq!((a.seed, a.k, a.method, a.setting, a.fallback_used), (b.seed, b.k, b.method, b.setting, b.fallback_used));
        assert_eq!(a.normalized_return, b.normalized_return);
        assert_eq!(a.constraint_violation, b.constraint_violation);
    }
}

#[test]
fn empty_results_still_have_a_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    emit_results(&[], &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap().trim_end(), CSV_HEADER);
    assert!(read_results(&path).unwrap().is_empty());
}

#[test]
fn summary_matches_hand_computation() {
    let rows = vec![row(0, 1, 0.25, 0.0), row(1, 1, 0.75, 0.5), row(2, 1, 0.5, 0.25)];
    let s = summarize(&rows);
    assert_eq!(s.len(), 1);
    assert_eq!(s[0].n, 3);
    assert!((s[0].mean_normalized_return - 0.5).abs() < 1e-12);
    // Sample std of {0.25, 0.75, 0.5} is 0.25, so the stderr is 0.25 / √3.
    assert!((s[0].stderr_normalized_return - 0.25 / 3f64.sqrt()).abs() < 1e-12);
    assert!((s[0].fallback_rate - 1.0 / 3.0).abs() < 1e-12);
    assert_eq!(mean_stderr(&[2.0]), (2.0, 0.0));
}
