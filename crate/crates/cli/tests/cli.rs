use std::path::Path;
use std::process::{Command, Output};

fn morphseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morphseg"))
        .args(args)
        .output()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = morphseg(&["segment", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(morphseg(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn help_exits_zero() {
    let out = morphseg(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("train-crf"));
}

#[test]
fn missing_input_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = morphseg(&[
        "train-lm",
        "--in",
        "/nonexistent/words",
        "--direction",
        "fwd",
        "--out",
        p(&dir.path().join("x")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("not found"));
}

#[test]
fn constant_entropy_requires_theta() {
    let dir = tempfile::tempdir().unwrap();
    let words = dir.path().join("w");
    std::fs::write(&words, "abantu\n").unwrap();
    for lm in ["f.lm", "b.lm"] {
        std::fs::write(dir.path().join(lm), "").unwrap();
    }
    let out = morphseg(&[
        "unsup-segment",
        "--method",
        "entropy-const",
        "--in",
        p(&words),
        "--out",
        p(&dir.path().join("o")),
        "--fwd-lm",
        p(&dir.path().join("f.lm")),
        "--bwd-lm",
        p(&dir.path().join("b.lm")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--theta"));
}

#[test]
fn malformed_data_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.surf");
    std::fs::write(&bad, "abantu\taba-nt\n").unwrap();
    let out = morphseg(&["train-crf", "--train", p(&bad), "--out", p(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr(&out).lines().count(), 1);

    let garbage = dir.path().join("model");
    std::fs::write(&garbage, "not a model\n").unwrap();
    let words = dir.path().join("w");
    std::fs::write(&words, "abantu\n").unwrap();
    let out = morphseg(&[
        "segment",
        "--model",
        p(&garbage),
        "--in",
        p(&words),
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn evaluate_rejects_mismatched_words() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    std::fs::write(&a, "abantu\taba-ntu\n").unwrap();
    std::fs::write(&b, "umuntu\tumu-ntu\n").unwrap();
    assert_eq!(
        morphseg(&["evaluate", "--pred", p(&a), "--gold", p(&b)]).status.code(),
        Some(2)
    );
}

#[test]
fn derive_surface_reproduces_vowel_coalescence() {
    let dir = tempfile::tempdir().unwrap();
    let canon = dir.path().join("zulu.canon");
    std::fs::write(&canon, "# comment\nngezinkonzo\tnga[a]-i[b]-zin[c]-konzo[d]\n").unwrap();
    let surf = dir.path().join("zulu.surf");
    let out = morphseg(&["derive-surface", "--in", p(&canon), "--out", p(&surf)]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(std::fs::read_to_string(&surf).unwrap(), "ngezinkonzo\tnge-zin-konzo\n");
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["stats"]["deletions"], 1);
    assert_eq!(summary["stats"]["substitutions"], 1);
}

#[test]
fn synth_pipeline_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = morphseg(&[
        "synth",
        "--out-dir",
        p(d),
        "--train",
        "200",
        "--dev",
        "20",
        "--test",
        "50",
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(
        (summary["train"].as_u64(), summary["test"].as_u64()),
        (Some(200), Some(50))
    );
    let out = morphseg(&[
        "train-crf",
        "--train",
        p(&d.join("train.surf")),
        "--dev",
        p(&d.join("dev.surf")),
        "--max-iter",
        "50",
        "--out",
        p(&d.join("m.crf")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = morphseg(&[
        "segment",
        "--model",
        p(&d.join("m.crf")),
        "--in",
        p(&d.join("test.surf")),
        "--out",
        p(&d.join("pred")),
    ]);
    assert!(out.status.success());
    let out = morphseg(&[
        "evaluate",
        "--pred",
        p(&d.join("pred")),
        "--gold",
        p(&d.join("test.surf")),
    ]);
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(summary["report"]["f1"].as_f64().unwrap() > 0.8, "{summary}");
}

#[test]
fn synth_with_no_stems_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = morphseg(&["synth", "--out-dir", p(dir.path()), "--stems", "0"]);
    assert_eq!(out.status.code(), Some(1));
}
