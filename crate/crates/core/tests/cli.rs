//! End-to-end runs of the `roundlab` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn roundlab(args: &[&str], cfg: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roundlab"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .env_remove("ROUNDLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn gen_prints_checks_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = roundlab(&["gen"], &fixture("small_smooth.json"), out);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
        assert!(text(&o.stdout).contains("delta_related: PASS"));
    }
    assert_eq!(read(&a.join("instance.json")), read(&b.join("instance.json")));
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = tempfile::tempdir().unwrap();
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let o = roundlab(&["gen", "--seed", seed], &fixture("one_round.json"), &out);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
        read(&out.join("instance.json"))
    };
    let (s5, s5b, s6) = (run("5", "x"), run("5", "y"), run("6", "z"));
    assert_eq!(s5, s5b);
    assert_ne!(s5, s6);
}

#[test]
fn one_round_precondition_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = roundlab(&["gen"], &fixture("bad_one_round.json"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("BadParams"), "{}", text(&o.stderr));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = roundlab(&["run"], &fixture("unknown_key.json"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o.stderr).contains("unknown field"), "{}", text(&o.stderr));
}

#[test]
fn run_csv_schema_and_thread_independence() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}"));
        let o = roundlab(&["run", "--threads", threads], &fixture("small_run.json"), &out);
        assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
        outputs.push(out);
    }
    let files = ["rounds_p0.csv", "rounds_p1.csv", "rounds_p2.csv", "summary.csv", "transcript_p1.jsonl"];
    for f in files {
        assert_eq!(read(&outputs[0].join(f)), read(&outputs[1].join(f)), "{f}");
    }
    let rounds = read(&outputs[0].join("rounds_p1.csv"));
    let mut lines = rounds.lines();
    assert_eq!(lines.next(), Some("round,solver,suboptimality,support_max,broadcast_reals"));
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols.len(), 5);
        let round: usize = cols[0].parse().unwrap();
        let sub: f64 = cols[2].parse().unwrap();
        let support: usize = cols[3].parse().unwrap();
        assert!(sub.is_finite());
        assert!(support <= round + 1, "{line}");
    }
    let summary = read(&outputs[0].join("summary.csv"));
    assert_eq!(
        summary.lines().next(),
        Some("point,delta,lambda,d,solver,eps,rounds_to_eps,lower_bound")
    );
    assert_eq!(summary.lines().count(), 1 + 3 * 3 * 2);
}

#[test]
fn threads_fall_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let with_env = |v: &str| {
        Command::new(env!("CARGO_BIN_EXE_roundlab"))
            .args(["run", "--config"])
            .arg(fixture("one_round.json"))
            .arg("--out")
            .arg(dir.path())
            .env("ROUNDLAB_THREADS", v)
            .output()
            .unwrap()
    };
    assert_eq!(with_env("2").status.code(), Some(0));
    let zero = with_env("0");
    assert_eq!(zero.status.code(), Some(2));
    assert!(text(&zero.stderr).contains("threads"));
}

#[test]
fn one_shot_run_emits_a_single_data_round() {
    let dir = tempfile::tempdir().unwrap();
    let o = roundlab(&["run"], &fixture("one_round.json"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let rounds = read(&dir.path().join("rounds.csv"));
    let rows: Vec<&str> = rounds.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("0,one_shot_average,"));
    assert!(rows[1].starts_with("1,one_shot_average,"));
    let jsonl = read(&dir.path().join("transcript.jsonl"));
    assert_eq!(jsonl.lines().count(), 1);
    let v: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert_eq!(v["solver"], "one_shot_average");
}

#[test]
fn verify_passes_defaults_and_fails_tampered_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let ok = roundlab(&["verify"], &fixture("small_smooth.json"), &dir.path().join("ok"));
    assert_eq!(ok.status.code(), Some(0), "{}", text(&ok.stdout));
    assert!(!text(&ok.stdout).contains("FAIL"));

    let bad = roundlab(&["verify"], &fixture("tampered.json"), &dir.path().join("bad"));
    assert_eq!(bad.status.code(), Some(1));
    assert!(text(&bad.stdout).contains("optimum_residual: FAIL"), "{}", text(&bad.stdout));
    assert!(text(&bad.stderr).contains("optimum_residual"));
}

#[test]
fn verify_sweeps_tie_rules_on_nonsmooth() {
    let dir = tempfile::tempdir().unwrap();
    let o = roundlab(&["verify"], &config("nonsmooth.json"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stdout));
    let out = text(&o.stdout);
    for a in ["0", "0.5", "1"] {
        assert!(out.contains(&format!("progress_subgradient_alpha={a}: PASS")), "{out}");
    }
    assert_eq!(read(&dir.path().join("verify.txt")), out);
}

#[test]
fn curve_csv_golden_header_and_finite_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = roundlab(&["curve"], &fixture("small_smooth.json"), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", text(&o.stderr));
    let csv = read(&dir.path().join("curve.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("T,measured_best_in_subspace,bound_curve,ratio"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 13);
    for r in &rows {
        assert_eq!(r.len(), 4);
        for v in r.iter().filter(|v| !v.is_empty()) {
            assert!(v.parse::<f64>().unwrap().is_finite());
        }
    }
    // d = 16: rows T ≤ 14 are in regime.
    assert!(rows.iter().all(|r| !r[2].is_empty()));
}

#[test]
fn one_round_has_no_curve() {
    let dir = tempfile::tempdir().unwrap();
    let o = roundlab(&["curve"], &fixture("one_round.json"), dir.path());
    assert_eq!(o.status.code(), Some(2));
}
