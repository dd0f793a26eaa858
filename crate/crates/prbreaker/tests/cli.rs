//! Exit-code and wire-format contract of the `prbreaker` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use prbreaker::config::ToolConfig;

fn prbreaker(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prbreaker"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr);
    let errors: Vec<&str> = text.lines().filter(|l| l.starts_with("error: ")).collect();
    assert_eq!(errors.len(), 1, "want one error line, got: {text}");
    errors[0].to_string()
}

fn synth_corpus(dir: &Path, n: usize) -> std::path::PathBuf {
    let corpus = dir.join("corpus.jsonl");
    let out = prbreaker(&[
        "synth",
        "--out",
        corpus.to_str().unwrap(),
        "--n",
        &n.to_string(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    corpus
}

#[test]
fn help_prints_usage_and_exits_zero() {
    let out = prbreaker(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "ingest",
        "featurize",
        "label",
        "train",
        "evaluate",
        "score",
        "triage",
        "synth",
        "report",
        "pipeline",
    ] {
        assert!(text.contains(sub), "--help must list {sub}");
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = prbreaker(&["synth", "--out", "/tmp/x.jsonl", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn missing_input_exits_two_and_names_the_path() {
    let out = prbreaker(&[
        "featurize",
        "--input",
        "/no/such/corpus.jsonl",
        "--out",
        "/tmp/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let line = stderr_line(&out);
    assert!(line.contains("missing_input"), "{line}");
    assert!(line.contains("/no/such/corpus.jsonl"), "{line}");
}

#[test]
fn malformed_corpus_exits_four_with_the_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\": 3\n").unwrap();
    let out = prbreaker(&[
        "ingest",
        "--input",
        bad.to_str().unwrap(),
        "--out",
        dir.path().join("canon.jsonl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
    let line = stderr_line(&out);
    assert!(line.contains("malformed"), "{line}");
    assert!(line.contains('1'), "should name line 1: {line}");
}

#[test]
fn divergent_config_is_a_schema_mismatch() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 300);
    let model = dir.path().join("model.txt");
    let out = prbreaker(&[
        "train",
        "--input",
        corpus.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    // widening a pattern table changes the schema hash, so a model trained
    // under the default config must refuse to score
    let mut tool = ToolConfig::default();
    tool.patterns.config.extensions.push("cfg2".to_string());
    let custom = dir.path().join("custom.toml");
    fs::write(&custom, tool.to_toml_string()).unwrap();

    let out = prbreaker(&[
        "score",
        "--input",
        corpus.to_str().unwrap(),
        "--model",
        model.to_str().unwrap(),
        "--out",
        dir.path().join("scores.csv").to_str().unwrap(),
        "--config",
        custom.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_line(&out).contains("schema_mismatch"));
}

#[test]
fn pipeline_writes_all_artifacts_and_reruns_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = prbreaker(&["pipeline", "--out", out_dir.to_str().unwrap(), "--n", "400"]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        out_dir
    };
    let a = run("a");
    for artifact in [
        "corpus.jsonl",
        "features_t0.csv",
        "labels.csv",
        "model.txt",
        "eval/report.json",
        "eval/metrics.csv",
        "eval/importance.csv",
        "triage.csv",
        "triage.jsonl",
        "timeouts.csv",
    ] {
        assert!(a.join(artifact).exists(), "missing {artifact}");
    }
    let b = run("b");
    for artifact in [
        "model.txt",
        "eval/report.json",
        "eval/metrics.csv",
        "triage.csv",
    ] {
        assert_eq!(
            fs::read(a.join(artifact)).unwrap(),
            fs::read(b.join(artifact)).unwrap(),
            "{artifact} differs between reruns"
        );
    }

    let scores = a.join("scores.csv");
    let out = prbreaker(&[
        "score",
        "--input",
        a.join("corpus.jsonl").to_str().unwrap(),
        "--model",
        a.join("model.txt").to_str().unwrap(),
        "--out",
        scores.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let body = fs::read_to_string(&scores).unwrap();
    assert!(body.starts_with("# schema_hash="));
    assert_eq!(
        body.lines().count(),
        400 + 3,
        "two headers plus id,probability rows"
    );
}

#[test]
fn thread_count_does_not_change_output_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 500);
    let model_for = |threads: &str| {
        let model = dir.path().join(format!("model_{threads}.txt"));
        let out = prbreaker(&[
            "train",
            "--input",
            corpus.to_str().unwrap(),
            "--out",
            model.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        fs::read(model).unwrap()
    };
    assert_eq!(model_for("1"), model_for("4"));
}
