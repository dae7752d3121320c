//! End-to-end tests of the `fcopt` binary: exit codes, trace shapes,
//! byte-identical reruns, verification reports and comparisons.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fcopt"))
}

fn corpus_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../fcopt/corpus")
        .join(name)
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "fcopt {args:?} failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn run_writes_k_plus_one_rows() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    run_ok(&[
        "run",
        "--problem",
        corpus_path("lse-affine.json").to_str().unwrap(),
        "--method",
        "fgm",
        "--iters",
        "100",
        "--out",
        trace.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&trace).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,phi,gap,bound,step_norm,inner_iters,subproblem_kkt");
    assert_eq!(lines.len(), 1 + 101, "expected 101 data rows");
    // k strictly increasing from 0
    for (i, line) in lines[1..].iter().enumerate() {
        assert!(line.starts_with(&format!("{i},")));
    }
}

#[test]
fn invalid_method_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "run",
            "--problem",
            corpus_path("quad-uc.json").to_str().unwrap(),
            "--method",
            "sgd",
            "--iters",
            "5",
            "--out",
            dir.path().join("t.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn gm_on_quadratic_constraint_exits_2_citing_the_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "run",
            "--problem",
            corpus_path("one-dim-constraint.json").to_str().unwrap(),
            "--method",
            "gm",
            "--iters",
            "5",
            "--out",
            dir.path().join("t.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("F(L_1(f))"), "stderr: {err}");
}

#[test]
fn unreadable_file_exits_1() {
    let out = bin()
        .args(["run", "--problem", "/nonexistent/p.json", "--method", "gm", "--out", "/tmp/x.csv"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn identical_invocations_give_byte_identical_traces() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let path = dir.path().join(name);
        run_ok(&[
            "run",
            "--problem",
            corpus_path("max-quadratics.json").to_str().unwrap(),
            "--method",
            "gm",
            "--iters",
            "60",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        outputs.push(std::fs::read(&path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn verify_passes_on_corpus_and_rejects_empty_checks() {
    for name in ["quad-uc.json", "power-uc.json", "max-quadratics.json", "lse-affine.json"] {
        let out = run_ok(&[
            "verify",
            "--problem",
            corpus_path(name).to_str().unwrap(),
            "--samples",
            "500",
            "--seed",
            "3",
        ]);
        let text = String::from_utf8(out.stdout).unwrap();
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).expect("JSON line");
            assert_ne!(v["status"], "fail", "{name}: {line}");
        }
    }
    let out = bin()
        .args([
            "verify",
            "--problem",
            corpus_path("quad-uc.json").to_str().unwrap(),
            "--checks",
            "",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_summary_is_consistent_with_traces() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "compare",
        "--problem",
        corpus_path("quad-uc.json").to_str().unwrap(),
        "--methods",
        "gm,fgm,full",
        "--iters",
        "80",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    let phi_ref = summary["phi_ref"].as_f64().unwrap();
    for m in ["gm", "fgm", "full"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("{m}.csv"))).unwrap();
        let last = csv.lines().last().unwrap();
        let final_phi: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
        let reported = summary["methods"][m]["final_phi"].as_f64().unwrap();
        assert!((final_phi - reported).abs() <= 1e-12);
        // the shared reference never exceeds any observed phi
        for line in csv.lines().skip(1) {
            let phi: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!(phi >= phi_ref - 1e-9);
        }
        assert_eq!(summary["methods"][m]["bound_satisfied"], true);
    }
}

#[test]
fn compare_single_method_degenerates_to_run() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&[
        "compare",
        "--problem",
        corpus_path("quad-uc.json").to_str().unwrap(),
        "--methods",
        "gm",
        "--iters",
        "30",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let via_compare = std::fs::read(dir.path().join("gm.csv")).unwrap();
    let single = dir.path().join("single.csv");
    run_ok(&[
        "run",
        "--problem",
        corpus_path("quad-uc.json").to_str().unwrap(),
        "--method",
        "gm",
        "--iters",
        "30",
        "--out",
        single.to_str().unwrap(),
    ]);
    assert_eq!(via_compare, std::fs::read(single).unwrap());
}

#[test]
fn regularize_solve_reaches_target() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("reg.csv");
    run_ok(&[
        "regularize-solve",
        "--problem",
        corpus_path("rankdef-quad.json").to_str().unwrap(),
        "--epsilon",
        "1e-3",
        "--out",
        trace.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&trace).unwrap();
    let last = text.lines().last().unwrap();
    let gap: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!(gap <= 1e-3, "final gap {gap}");
}

#[test]
fn corpus_listing_and_export() {
    let out = run_ok(&["corpus"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 8);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exported.json");
    run_ok(&["corpus", "quad-uc", "--out", path.to_str().unwrap()]);
    // exported file loads and runs
    let t = dir.path().join("t.csv");
    run_ok(&[
        "run",
        "--problem",
        path.to_str().unwrap(),
        "--method",
        "full",
        "--iters",
        "3",
        "--out",
        t.to_str().unwrap(),
    ]);
}

#[test]
fn log_env_var_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .env("FCOPT_LOG", "debug")
        .args([
            "run",
            "--problem",
            corpus_path("quad-uc.json").to_str().unwrap(),
            "--method",
            "gm",
            "--iters",
            "3",
            "--out",
            dir.path().join("t.csv").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
}
