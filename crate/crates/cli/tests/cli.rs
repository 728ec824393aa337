use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_smoothcd"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn smoothcd")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn without_time(csv: &str) -> String {
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f.remove(2);
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn help_documents_every_flag() {
    let o = run(&["--help"]);
    assert!(o.status.success());
    let top = stdout(&o);
    for word in ["solve", "bench", "check", "constants", "SMOOTHCD_THREADS"] {
        assert!(top.contains(word), "top-level help lacks {word}");
    }
    let expect: &[(&[&str], &[&str])] = &[
        (&["solve"], &["--smoothing", "--solver", "--out", "--gamma", "--alpha", "--seed", "--tol", "--epochs", "else 0.1", "else 1000"]),
        (&["bench"], &["--out", "--gamma", "--alpha", "--seed", "--tol", "--epochs"]),
        (&["check"], &["--suite", "--seed", "--lipschitz-scale", "default: 1"]),
        (&["constants", "restart-period"], &["--blocks", "--q", "--kappa", "--contraction", "--delta0"]),
    ];
    for (cmd, flags) in expect {
        let mut args = cmd.to_vec();
        args.push("--help");
        let o = run(&args);
        assert!(o.status.success());
        let text = stdout(&o);
        for f in *flags {
            assert!(text.contains(f), "{cmd:?} help lacks {f}:\n{text}");
        }
    }
}

#[test]
fn solve_tiny_problem_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let o = run(&["solve", data("tiny_solve.json").to_str().unwrap(), "--out", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("k,epoch,time_s,f_gamma,f_orig_at_B,grad_norm\n"));
    let out = stdout(&o);
    for key in ["F_gamma", "F(B(x))", "grad_norm", "epochs"] {
        assert!(out.contains(key));
    }
}

#[test]
fn overrides_reach_the_solver() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let cfg = data("tiny_solve.json");
    let o = run(&["solve", cfg.to_str().unwrap(), "--out", trace.to_str().unwrap(), "--tol", "1e-6", "--seed", "3", "--solver", "accd"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("tol=0.000001"), "{out}");
    assert!(out.contains("seed=3") && out.contains("solver=accd"));
    let grad: f64 = out.lines().find(|l| l.starts_with("grad_norm")).unwrap().split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(grad <= 1e-6);
}

#[test]
fn solve_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = data("tiny_solve.json");
    let mut traces = Vec::new();
    for name in ["a.csv", "b.csv"] {
        let p = dir.path().join(name);
        let o = run(&["solve", cfg.to_str().unwrap(), "--smoothing", "fb", "--out", p.to_str().unwrap()]);
        assert!(o.status.success());
        traces.push(without_time(&std::fs::read_to_string(p).unwrap()));
    }
    assert_eq!(traces[0], traces[1]);
}

#[test]
fn quartic_problem_uses_relative_descent() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("q.csv");
    let o = run(&["solve", data("quartic_solve.json").to_str().unwrap(), "--out", trace.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("converged    true"));
}

#[test]
fn unknown_smoothing_is_a_usage_error() {
    let o = run(&["solve", data("tiny_solve.json").to_str().unwrap(), "--smoothing", "huber", "--out", "/dev/null"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("moreau") && err.contains("fb") && err.contains("dr") && err.contains("ns"), "{err}");
}

#[test]
fn bad_flags_and_missing_files_exit_2() {
    assert_eq!(run(&["solve"]).status.code(), Some(2));
    assert_eq!(run(&["solve", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(run(&["solve", data("tiny_solve.json").to_str().unwrap(), "--alpha", "x"]).status.code(), Some(2));
    assert_eq!(run(&["solve", data("tiny_solve.json").to_str().unwrap(), "--alpha", "3", "--out", "/dev/null"]).status.code(), Some(2));
}

#[test]
fn bench_micro_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("results");
    let start = Instant::now();
    let o = bin()
        .args(["bench", data("micro_bench.json").to_str().unwrap(), "--out", out.to_str().unwrap()])
        .env("SMOOTHCD_THREADS", "2")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(start.elapsed() < Duration::from_secs(60));
    let files: Vec<String> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(files.iter().filter(|f| f.ends_with(".csv")).count(), 12);
    assert!(files.contains(&"summary.json".to_string()));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    for g in summary["groups"].as_array().unwrap() {
        for key in ["median_epochs_to_tol", "median_time_s", "success_rate"] {
            assert!(g.get(key).is_some());
        }
    }
}

#[test]
fn malformed_bench_spec_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"problem": {"generator": "quadratic_l2", "n": 0}, "smoothings": ["fb"], "solvers": [{"solver": "cd"}], "output": "x"}"#).unwrap();
    assert_eq!(run(&["bench", spec.to_str().unwrap()]).status.code(), Some(2));
    std::fs::write(&spec, "{ not json").unwrap();
    assert_eq!(run(&["bench", spec.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn check_suites() {
    let o = run(&["check"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let out = stdout(&o);
    for s in ["prox", "smoothing", "lipschitz", "solvers", "bregman"] {
        assert!(out.contains(&format!("PASS {s}")), "{out}");
    }

    let o = run(&["check", "--suite", "prox"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    assert!(out.starts_with("PASS prox"));

    let o = run(&["check", "--suite", "lipschitz", "--lipschitz-scale", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("FAIL lipschitz"));

    assert_eq!(run(&["check", "--suite", "nope"]).status.code(), Some(2));
}

#[test]
fn constants_on_the_command_line() {
    let value = |args: &[&str]| -> String {
        let mut a = vec!["constants"];
        a.extend_from_slice(args);
        let o = run(&a);
        assert!(o.status.success(), "{args:?}: {}", stderr(&o));
        stdout(&o).trim().to_string()
    };
    assert_eq!(value(&["restart-period", "--blocks", "10", "--q", "2", "--kappa", "1", "--contraction", "e^-2"]), "55");
    assert_eq!(value(&["restart-period", "--blocks", "1", "--q", "2", "--kappa", "4", "--contraction", "1"]), "1");
    assert_eq!(value(&["restart-period", "--blocks", "1", "--q", "1", "--kappa", "1", "--contraction", "1", "--delta0", "4"]), "4");
    assert_eq!(value(&["growth", "--smoothing", "moreau", "--q", "2", "--kappa", "1", "--gamma", "1"]), "0.5");
    assert_eq!(value(&["doubling", "--k0", "5", "--count", "7"]), "5 10 5 20 5 10 5");
    let c1: f64 = value(&["c1", "--kappa", "0.5", "--q", "2", "--blocks", "20"]).parse().unwrap();
    assert!(c1 > 0.0 && c1 < 1.0);

    assert_eq!(run(&["constants", "growth", "--smoothing", "moreau", "--q", "3", "--kappa", "1"]).status.code(), Some(2));
    assert_eq!(run(&["constants", "restart-period", "--blocks", "1", "--q", "0.5", "--kappa", "1", "--contraction", "1"]).status.code(), Some(2));
}
