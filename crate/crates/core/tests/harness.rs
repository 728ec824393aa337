use std::fs;

use smoothcd::harness::{
    gen_quadratic_l2, gen_quadratic_tv, quick_check_options, reference_solve, run_experiment, ExperimentSpec, Quality,
};
use smoothcd::smoothing::{build_surrogate, default_gamma, surrogate_check, SmoothingKind};
use smoothcd::solvers::{read_trace_csv, run, RunConfig, SolverKind};

fn spec(dir: &std::path::Path, extra: &str) -> ExperimentSpec {
    let text = format!(
        r#"{{
            "problem": {{"generator": "quadratic_l2", "n": 30, "m": 15, "lambda": 0.2, "seed": 4}},
            "smoothings": ["fb", "ns"],
            "solvers": [{{"solver": "cd", "epochs": 200, "trace_every": 10}},
                        {{"solver": "accd", "epochs": 200, "trace_every": 10}}],
            "repeats": 3,
            "output": {:?}{extra}
        }}"#,
        dir.to_str().unwrap()
    );
    ExperimentSpec::from_json_str(&text).unwrap()
}

#[test]
fn grid_writes_one_trace_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let res = run_experiment(&spec(dir.path(), "")).unwrap();
    assert!(res.all_completed());
    let names: Vec<String> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    assert_eq!(names.iter().filter(|n| n.ends_with(".csv")).count(), 12);
    assert!(names.contains(&"summary.json".into()));
    for o in &res.runs {
        let rows = read_trace_csv(fs::read(o.trace_file.as_ref().unwrap()).unwrap().as_slice()).unwrap();
        assert!(!rows.is_empty());
    }
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(&res.summary_file).unwrap()).unwrap();
    assert_eq!(summary["groups"].as_array().unwrap().len(), 4);
    assert_eq!(summary["total_runs"], 12);
}

#[test]
fn failures_are_recorded_and_the_grid_continues() {
    // γ = 10 violates γL < 1 for fb but is a valid ns parameter
    let dir = tempfile::tempdir().unwrap();
    let res = run_experiment(&spec(dir.path(), r#", "gamma": 10.0"#)).unwrap();
    assert!(!res.all_completed());
    assert_eq!(res.summary.failed_runs, 6);
    for g in &res.summary.groups {
        match g.smoothing {
            SmoothingKind::Fb => {
                assert_eq!(g.failures.len(), 3);
                assert_eq!(g.success_rate, 0.0);
            }
            _ => assert!(g.failures.is_empty()),
        }
    }
    let csvs = fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "csv")).count();
    assert_eq!(csvs, 6);
}

#[test]
fn summaries_are_reproducible() {
    let strip = |path: &std::path::Path| {
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        for g in v["groups"].as_array_mut().unwrap() {
            g.as_object_mut().unwrap().remove("median_time_s");
        }
        v
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ra = run_experiment(&spec(a.path(), "")).unwrap();
    let rb = run_experiment(&spec(b.path(), "")).unwrap();
    assert_eq!(strip(&ra.summary_file), strip(&rb.summary_file));
}

#[test]
fn toml_specs_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.toml");
    fs::write(
        &path,
        format!(
            "smoothings = [\"dr\"]\nrepeats = 2\noutput = {:?}\n\n[problem]\ngenerator = \"quadratic_tv\"\nn = 12\nlambda = 0.5\n\n[[solvers]]\nsolver = \"restart\"\nepochs = 50\n",
            dir.path().join("out").to_str().unwrap()
        ),
    )
    .unwrap();
    let s = ExperimentSpec::load(&path).unwrap();
    let res = run_experiment(&s).unwrap();
    assert_eq!(res.runs.len(), 2);
    assert!(res.all_completed());
}

#[test]
fn generated_problems_pass_the_surrogate_check() {
    for inst in [gen_quadratic_l2(40, 20, 0.5, 2).unwrap(), gen_quadratic_tv(16, 0.3, 2).unwrap()] {
        for kind in SmoothingKind::ALL {
            let g = default_gamma(kind, &inst.composite, inst.saddle.as_deref()).unwrap();
            let s = build_surrogate(kind, &inst.composite, inst.saddle.as_ref(), g).unwrap();
            let rep = surrogate_check(s.as_ref(), &|x| s.objective(x), &quick_check_options(5)).unwrap();
            assert!(rep.passed(), "{kind}: {rep:?}");
        }
    }
}

#[test]
fn recorded_objectives_stay_above_the_reference() {
    let inst = gen_quadratic_l2(20, 10, 0.5, 8).unwrap();
    let reference = reference_solve(&inst.composite).unwrap();
    assert_ne!(reference.quality, Quality::Exact);
    for kind in [SmoothingKind::Fb, SmoothingKind::Dr, SmoothingKind::Moreau] {
        let g = default_gamma(kind, &inst.composite, None).unwrap();
        let s = build_surrogate(kind, &inst.composite, None, g).unwrap();
        for solver in [SolverKind::Cd, SolverKind::Accd, SolverKind::Restart] {
            let cfg = RunConfig { epochs: 300, tol: 1e-6, ..RunConfig::new(solver) };
            let r = run(s.as_ref(), &inst.x0, &cfg).unwrap();
            for row in &r.trace {
                assert!(row.f_orig_at_b >= reference.f_star - 1e-8, "{kind} {solver:?}: {} < {}", row.f_orig_at_b, reference.f_star);
            }
        }
    }
}
