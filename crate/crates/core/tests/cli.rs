mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use shockspec::synth::{generate_shock, GenParams};

const SUBCOMMANDS: [&str; 8] = [
    "gen",
    "srs",
    "sds-fit",
    "losses-eval",
    "eval",
    "aggregate",
    "export-csv",
    "bench",
];

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shockspec"));
    cmd.env_remove("SHOCKSPEC_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn digest(path: &Path) -> Vec<u8> {
    Sha256::digest(std::fs::read(path).unwrap()).to_vec()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn small_params(dir: &Path) -> PathBuf {
    let path = dir.join("params.json");
    std::fs::write(&path, r#"{"n_samples": 2048}"#).unwrap();
    path
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {text}");
    serde_json::from_str(lines[0]).unwrap()
}

#[test]
fn gen_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path());
    let a = dir.path().join("a.shds");
    let b = dir.path().join("b.shds");
    for out in [&a, &b] {
        let summary = ok(&[
            "gen",
            "--count",
            "6",
            "--seed",
            "11",
            "--params",
            p(&params),
            "--out",
            p(out),
        ]);
        assert_eq!(summary["count"], 6);
    }
    assert_eq!(digest(&a), digest(&b));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path());
    let one = dir.path().join("one.shds");
    let two = dir.path().join("two.shds");
    let env = dir.path().join("env.shds");
    ok(&[
        "--threads",
        "1",
        "gen",
        "--count",
        "9",
        "--params",
        p(&params),
        "--out",
        p(&one),
    ]);
    ok(&[
        "gen",
        "--count",
        "9",
        "--params",
        p(&params),
        "--out",
        p(&two),
        "--threads",
        "2",
    ]);
    let out = bin()
        .env("SHOCKSPEC_THREADS", "3")
        .args([
            "gen",
            "--count",
            "9",
            "--params",
            p(&params),
            "--out",
            p(&env),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(digest(&one), digest(&two));
    assert_eq!(digest(&one), digest(&env));

    let f1 = dir.path().join("f1.json");
    let f2 = dir.path().join("f2.json");
    for (t, f) in [("1", &f1), ("2", &f2)] {
        ok(&[
            "--threads",
            t,
            "sds-fit",
            "--target",
            p(&one),
            "--indices",
            "0,4",
            "--atoms",
            "2",
            "--restarts",
            "3",
            "--max-evals",
            "40",
            "--out",
            p(f),
        ]);
    }
    assert_eq!(std::fs::read(&f1).unwrap(), std::fs::read(&f2).unwrap());

    let bad = run(&[
        "--threads",
        "0",
        "gen",
        "--count",
        "1",
        "--out",
        p(&dir.path().join("x")),
    ]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn eval_of_targets_against_themselves() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path());
    let ds = dir.path().join("t.shds");
    ok(&[
        "gen",
        "--count",
        "5",
        "--params",
        p(&params),
        "--out",
        p(&ds),
    ]);
    let report = dir.path().join("report.json");
    let csv = dir.path().join("csv");
    let summary = ok(&[
        "eval",
        "--targets",
        p(&ds),
        "--candidates",
        p(&ds),
        "--report",
        p(&report),
        "--csv",
        p(&csv),
    ]);
    assert_eq!(summary["rmsle_mean"], 0.0);
    assert_eq!(summary["db_within_1"], 1.0);
    let r = read_json(&report);
    assert_eq!(r["per_sample_rmsle"], json!([0.0, 0.0, 0.0, 0.0, 0.0]));
    for name in ["db_histogram.csv", "db_ecdf.csv", "rmsle_ecdf.csv"] {
        assert!(csv.join(name).exists(), "{name}");
    }
}

#[test]
fn recomputed_spectra_evaluate_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path());
    let ds = dir.path().join("t.shds");
    let re = dir.path().join("re.shds");
    ok(&[
        "gen",
        "--count",
        "4",
        "--params",
        p(&params),
        "--out",
        p(&ds),
    ]);
    ok(&["srs", "--in", p(&ds), "--out", p(&re), "--pad-scale", "1"]);
    let report = dir.path().join("report.json");
    let summary = ok(&[
        "eval",
        "--targets",
        p(&ds),
        "--candidates",
        p(&re),
        "--report",
        p(&report),
    ]);
    assert_eq!(summary["db_within_1"], 1.0);

    let csv = dir.path().join("spectra.csv");
    let s = ok(&["export-csv", "--in", p(&re), "--out", p(&csv)]);
    assert_eq!(s["rows"], 400);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("record,freq_hz,value"));
    assert_eq!(text.lines().count(), 401);

    let one = dir.path().join("one.csv");
    let s = ok(&[
        "export-csv",
        "--in",
        p(&re),
        "--out",
        p(&one),
        "--index",
        "2",
    ]);
    assert_eq!(s["rows"], 100);
    assert!(std::fs::read_to_string(&one)
        .unwrap()
        .lines()
        .skip(1)
        .all(|l| l.starts_with("2,")));
}

#[test]
fn aggregate_modes() {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path());
    let ds = dir.path().join("t.shds");
    ok(&[
        "gen",
        "--count",
        "6",
        "--params",
        p(&params),
        "--out",
        p(&ds),
        "--normalize",
    ]);
    let mean = ok(&["aggregate", "--in", p(&ds), "--mode", "mean"]);
    assert_eq!(mean["values"].as_array().unwrap().len(), 100);
    let out = dir.path().join("upper.json");
    ok(&[
        "aggregate",
        "--in",
        p(&ds),
        "--mode",
        "upper-tol",
        "--k",
        "1.5",
        "--out",
        p(&out),
    ]);
    let upper = read_json(&out);
    assert_eq!(upper["freqs_hz"].as_array().unwrap().len(), 100);
    assert!(upper["values"]
        .as_array()
        .unwrap()
        .iter()
        .all(|v| v.as_f64().unwrap() > 0.0));
}

#[test]
fn sds_fit_writes_fits_and_signals() {
    fit_then_eval(false);
}

#[test]
fn sds_fit_of_normalized_targets_evaluates_consistently() {
    fit_then_eval(true);
}

fn fit_then_eval(normalize: bool) {
    let dir = tempfile::tempdir().unwrap();
    let params = small_params(dir.path());
    let ds = dir.path().join("t.shds");
    let mut args = vec![
        "gen",
        "--count",
        "3",
        "--params",
        p(&params),
        "--out",
        p(&ds),
    ];
    if normalize {
        args.push("--normalize");
    }
    ok(&args);
    let fits = dir.path().join("fits.json");
    let signals = dir.path().join("sds.shds");
    let summary = ok(&[
        "sds-fit",
        "--target",
        p(&ds),
        "--atoms",
        "2",
        "--restarts",
        "1",
        "--max-evals",
        "30",
        "--out",
        p(&fits),
        "--signals-out",
        p(&signals),
    ]);
    assert_eq!(summary["count"], 3);
    let doc = read_json(&fits);
    assert_eq!(doc["fits"].as_array().unwrap().len(), 3);
    let report = dir.path().join("r.json");
    let s = ok(&[
        "eval",
        "--targets",
        p(&ds),
        "--candidates",
        p(&signals),
        "--report",
        p(&report),
    ]);
    let fitted: Vec<f64> = doc["fits"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["loss"].as_f64().unwrap())
        .collect();
    let evaluated: Vec<f64> = read_json(&report)["per_sample_rmsle"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    // rendered models are stored in f32, so the two agree only approximately
    for (a, b) in fitted.iter().zip(&evaluated) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
    assert_eq!(s["count"], 3);
}

#[test]
fn exit_codes_and_error_lines() {
    let dir = tempfile::tempdir().unwrap();

    let out = run(&["gen", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["kind"], "usage");

    let out = run(&["gen", "--count", "0", "--out", p(&dir.path().join("z"))]);
    assert_eq!(out.status.code(), Some(1));

    let missing = dir.path().join("missing.shds");
    let out = run(&[
        "eval",
        "--targets",
        p(&missing),
        "--candidates",
        p(&missing),
        "--report",
        "r.json",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["kind"], "io");
    assert!(!err["error"].as_str().unwrap().is_empty());

    let params = small_params(dir.path());
    let ds = dir.path().join("t.shds");
    ok(&[
        "gen",
        "--count",
        "1",
        "--params",
        p(&params),
        "--out",
        p(&ds),
    ]);
    let out = run(&[
        "sds-fit",
        "--target",
        p(&ds),
        "--budget-s",
        "0",
        "--out",
        p(&dir.path().join("f.json")),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["kind"], "budget_exhausted");

    let trunc = dir.path().join("trunc.shds");
    let bytes = std::fs::read(&ds).unwrap();
    std::fs::write(&trunc, &bytes[..bytes.len() - 1]).unwrap();
    let out = run(&[
        "export-csv",
        "--in",
        p(&trunc),
        "--out",
        p(&dir.path().join("c.csv")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["kind"], "corrupt");
}

#[test]
fn help_snapshots() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let top = String::from_utf8(out.stdout).unwrap();
    for name in SUBCOMMANDS {
        assert!(top.contains(name), "{name}");
    }
    common::assert_text_snapshot("help.txt", &top);
    for name in SUBCOMMANDS {
        let out = run(&[name, "--help"]);
        assert!(out.status.success(), "{name}");
        common::assert_text_snapshot(
            &format!("help_{name}.txt"),
            &String::from_utf8(out.stdout).unwrap(),
        );
    }
}

fn write_signal_fixture(path: &Path, seed: u64, stream: u64) {
    let params = GenParams {
        n_samples: 2048,
        ..GenParams::default().with_seed(seed)
    };
    let (s, _) = generate_shock(&params, stream).unwrap();
    let doc = json!({ "sample_rate_hz": s.sample_rate_hz(), "samples": s.samples() });
    std::fs::write(path, serde_json::to_string(&doc).unwrap() + "\n").unwrap();
}

/// Golden output of `losses-eval`; other implementations of the loss terms
/// are checked against the same fixture.
#[test]
fn losses_eval_golden() {
    let fixture = common::fixture_path("losses_eval");
    let target = fixture.join("target.json");
    let pred = fixture.join("pred.json");
    let latent = fixture.join("latent.json");
    let expected = fixture.join("expected.json");
    if common::updating() {
        std::fs::create_dir_all(&fixture).unwrap();
        write_signal_fixture(&target, 2024, 0);
        write_signal_fixture(&pred, 2024, 1);
        let lat = json!({ "mu": [0.5, -1.25, 0.0, 2.0], "log_var": [0.0, -0.5, 0.25, 1.0] });
        std::fs::write(&latent, serde_json::to_string_pretty(&lat).unwrap() + "\n").unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("losses.json");
    let summary = ok(&[
        "losses-eval",
        "--target",
        p(&target),
        "--pred",
        p(&pred),
        "--latent",
        p(&latent),
        "--out",
        p(&out),
    ]);
    let actual = read_json(&out);
    assert_eq!(summary["total"], actual["report"]["total"]);
    if common::updating() {
        std::fs::write(
            &expected,
            serde_json::to_string_pretty(&actual).unwrap() + "\n",
        )
        .unwrap();
    }
    common::assert_json_close(&actual, &read_json(&expected), 1e-12, "losses_eval");

    let parts = &actual["report"]["parts"];
    for key in ["shape", "ts", "psd", "srs", "kl"] {
        assert!(parts[key].as_f64().unwrap() > 0.0, "{key}");
    }
}
