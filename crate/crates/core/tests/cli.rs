use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use onlinedx::eval::{repeated_eval, Execution};
use onlinedx::ingest::{load_csv, ImputePolicy};
use onlinedx::report::mean_std;
use onlinedx::{Algorithm, LearnerConfig};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_onlinedx"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path, flip: &str) -> PathBuf {
    let path = dir.join("data.csv");
    stdout(&[
        "synth", "--pos", "148", "--neg", "34", "--flip", flip, "--seed", "7", "-o",
        path.to_str().unwrap(),
    ]);
    path
}

fn body(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn synth_writes_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth(dir.path(), "0.0");
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 183);
    assert!(text.starts_with("days_symptomatic,vomiting,"));
    assert!(text.lines().next().unwrap().ends_with(",dengue"));
}

#[test]
fn usage_errors_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "0.1");
    let data = data.to_str().unwrap();
    for args in [
        vec!["synth", "--pos", "5", "--neg", "5", "--flip", "1.0"],
        vec!["synth", "--pos", "5", "--neg", "5", "--flip", "-0.1"],
        vec!["incremental", data, "--algorithm", "pa", "--chunks", "183"],
        vec!["eval-online", data, "--algorithms", "pa,bogus"],
        vec!["eval-offline", data, "--model", "forest", "--tree-counts", "1,2,2"],
        vec!["eval-offline", data, "--model", "svm", "--fractions", "0.5,1.0"],
        vec!["eval-online", "/nonexistent/file.csv"],
    ] {
        let out = run(&args);
        assert!(!out.status.success(), "{args:?} should fail");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.starts_with("error"), "{args:?}: {err}");
    }
    let out = run(&["eval-online", data, "--algorithms", "bogus"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("arow") && err.contains("perceptron"), "{err}");
}

#[test]
fn eval_online_rows_match_library() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth(dir.path(), "0.1");
    let text = stdout(&[
        "eval-online", path.to_str().unwrap(), "--algorithms", "arow,perceptron,pa", "--runs", "6",
        "--seed", "11",
    ]);
    let data = load_csv(&path, ImputePolicy::default()).unwrap();
    let rows = body(&text);
    assert_eq!(rows[0], "algorithm,error_rate,n_updates,cpu_seconds");
    assert_eq!(rows.len(), 4);
    let mut last_error = f64::NEG_INFINITY;
    for row in &rows[1..] {
        let cells: Vec<&str> = row.split(',').collect();
        let alg: Algorithm = cells[0].parse().unwrap();
        let agg = repeated_eval(&LearnerConfig::new(alg), &data, 6, 11, Execution::Serial).unwrap();
        assert_eq!(cells[1], mean_std(&agg.error_rate));
        assert_eq!(cells[2], mean_std(&agg.n_updates));
        // ascending by mean error
        assert!(agg.error_rate.mean >= last_error);
        last_error = agg.error_rate.mean;
    }
}

#[test]
fn header_carries_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth(dir.path(), "0.1");
    let text = stdout(&[
        "incremental", path.to_str().unwrap(), "--algorithm", "scw1", "--c", "0.25", "--runs", "1",
        "--seed", "3",
    ]);
    for line in [
        "# command: incremental",
        "# algorithm: SCW1",
        "# mode: incremental",
        "# chunks: 10",
        "# seed: 3",
        "# runs: 1",
        "# c: 0.25",
        "# eta: 0.75",
        "# normalize: true",
        "# note: single run; std reported as 0",
    ] {
        assert!(text.lines().any(|l| l == line), "missing `{line}` in\n{text}");
    }
}

#[test]
fn retrain_and_incremental_columns_agree() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth(dir.path(), "0.1");
    let p = path.to_str().unwrap();
    let strip = |text: &str| -> Vec<String> {
        body(text)
            .iter()
            .map(|l| l.split(',').take(3).collect::<Vec<_>>().join(","))
            .collect()
    };
    let a = stdout(&["incremental", p, "--algorithm", "narow", "--mode", "retrain", "--runs", "5"]);
    let b = stdout(&["incremental", p, "--algorithm", "narow", "--mode", "incremental", "--runs", "5"]);
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn table_format_and_metrics_block() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth(dir.path(), "0.0");
    let out = dir.path().join("svm.txt");
    stdout(&[
        "eval-offline", path.to_str().unwrap(), "--model", "svm", "--fractions", "0.8", "--runs",
        "2", "--metrics", "--format", "table", "-o", out.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(out).unwrap();
    let lines = body(&text);
    assert!(lines[0].starts_with("fraction  train  test  accuracy"), "{text}");
    assert!(lines[2].starts_with("0.80      145    37    1.0000 ± 0.0000"), "{text}");
    let metrics_header = lines.iter().position(|l| l.starts_with("model")).unwrap();
    assert!(lines[metrics_header].contains("tp_rate") && lines[metrics_header].contains("mcc"));
    assert!(lines[metrics_header + 2].starts_with("svm    1.0000"), "{text}");
}

#[test]
fn train_and_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth(dir.path(), "0.0");
    let snap = dir.path().join("forest.json");
    stdout(&[
        "train", path.to_str().unwrap(), "--model", "forest", "--trees", "5", "--no-bootstrap",
        "-o", snap.to_str().unwrap(),
    ]);
    let text = stdout(&["predict", snap.to_str().unwrap(), path.to_str().unwrap()]);
    assert!(text.contains("# kind: forest"));
    assert!(text.contains("# accuracy: 1.0000"), "{text}");
    assert_eq!(body(&text).len(), 183);

    let out = run(&["train", path.to_str().unwrap(), "--model", "online", "-o", snap.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn no_normalize_is_recorded_in_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = synth(dir.path(), "0.1");
    let p = path.to_str().unwrap();
    let a = stdout(&["eval-online", p, "--algorithms", "perceptron", "--runs", "3", "--no-normalize"]);
    assert!(a.contains("# normalize: false"));
}
