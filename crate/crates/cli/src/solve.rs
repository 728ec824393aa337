use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use serde_json::Value;

use smoothcd::bregman::{kernel_from_json, rrcd_run, QuarticProblem};
use smoothcd::smoothing::{build_surrogate, resolve_gamma, GammaSpec, SmoothingKind};
use smoothcd::solvers::{self, trace_csv_string, RunConfig, RunResult, SolverKind};
use smoothcd::QuadraticComposite;

use crate::{CliError, CliResult, Overrides};

/// Single-run configuration. `problem` is a path relative to the config
/// file or an inline problem object.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    problem: Value,
    #[serde(default)]
    smoothing: Option<String>,
    #[serde(default)]
    gamma: Option<GammaSpec>,
    #[serde(default)]
    kernel: Option<Value>,
    #[serde(default)]
    solver: Option<RunConfig>,
    #[serde(default)]
    x0: Option<Vec<f64>>,
    #[serde(default)]
    trace: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn load_problem(v: &Value, base: &Path) -> CliResult<Value> {
    match v {
        Value::String(p) => {
            let path = base.join(p);
            let text = fs::read_to_string(&path).map_err(|e| usage(format!("cannot read problem {}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
        }
        Value::Object(_) => Ok(v.clone()),
        _ => Err(usage("\"problem\" must be a path or an object")),
    }
}

pub fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) {
    if let Some(a) = o.alpha {
        cfg.alpha = a;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(t) = o.tol {
        cfg.tol = t;
    }
    if let Some(e) = o.epochs {
        cfg.epochs = e;
    }
}

pub fn run(
    config: &Path,
    smoothing: Option<&str>,
    solver: Option<&str>,
    out: Option<PathBuf>,
    o: &Overrides,
) -> CliResult<()> {
    let text = fs::read_to_string(config).map_err(|e| usage(format!("cannot read {}: {e}", config.display())))?;
    let file: SolveConfig = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", config.display())))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let problem = load_problem(&file.problem, base)?;

    let mut cfg = file.solver.clone().unwrap_or_else(|| RunConfig::new(SolverKind::Cd));
    if let Some(s) = solver {
        cfg.solver = s.parse::<SolverKind>()?;
    }
    apply_overrides(&mut cfg, o);
    cfg.solver_config().validate()?;

    let trace_path = out.or_else(|| file.trace.as_ref().map(|t| base.join(t))).unwrap_or_else(|| PathBuf::from("trace.csv"));

    let quartic = problem.get("kind").and_then(Value::as_str) == Some("quartic");
    let (result, f_orig) = if quartic {
        solve_quartic(&problem, &file, &cfg)?
    } else {
        solve_composite(&problem, &file, smoothing, &cfg, o.gamma)?
    };

    fs::write(&trace_path, trace_csv_string(&result.trace))
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", trace_path.display())))?;
    println!("F_gamma      {:.12e}", result.f_gamma);
    println!("F(B(x))      {f_orig:.12e}");
    println!("grad_norm    {:.6e}", result.grad_norm);
    println!("epochs       {}", result.epochs);
    println!("converged    {}", result.converged);
    println!("trace        {}", trace_path.display());
    Ok(())
}

fn solve_composite(
    problem: &Value,
    file: &SolveConfig,
    smoothing: Option<&str>,
    cfg: &RunConfig,
    gamma: Option<f64>,
) -> CliResult<(RunResult, f64)> {
    let p = Arc::new(QuadraticComposite::from_json(problem)?);
    let name = smoothing
        .map(str::to_string)
        .or_else(|| file.smoothing.clone())
        .ok_or_else(|| usage("no smoothing given; valid choices are moreau, fb, dr, ns"))?;
    let kind: SmoothingKind = name.parse()?;
    let spec = gamma.map(GammaSpec::Value).or(file.gamma);
    let g = resolve_gamma(spec, kind, &p, None)?;
    let s = build_surrogate(kind, &p, None, g)?;
    let x0 = start_point(file, p.dim())?;
    println!(
        "config       smoothing={kind} gamma={g} solver={} alpha={} tol={} epochs={} seed={}",
        cfg.solver.as_str(),
        cfg.alpha,
        cfg.tol,
        cfg.epochs,
        cfg.seed
    );
    let r = solvers::run(s.as_ref(), &x0, cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    let f_orig = r.trace.last().map_or(f64::NAN, |t| t.f_orig_at_b);
    Ok((r, f_orig))
}

fn solve_quartic(problem: &Value, file: &SolveConfig, cfg: &RunConfig) -> CliResult<(RunResult, f64)> {
    if cfg.solver != SolverKind::Cd {
        return Err(usage("quartic problems are solved by relative coordinate descent; use solver cd"));
    }
    let p = QuarticProblem::from_json(problem)?;
    let kernel = kernel_from_json(file.kernel.as_ref().unwrap_or(&serde_json::json!({"kind": "power", "p": 4})))?;
    let x0 = start_point(file, p.dim())?;
    println!(
        "config       kernel={} alpha={} tol={} epochs={} seed={}",
        file.kernel.as_ref().and_then(|k| k.get("kind")).and_then(Value::as_str).unwrap_or("power"),
        cfg.alpha,
        cfg.tol,
        cfg.epochs,
        cfg.seed
    );
    let r = rrcd_run(&p, kernel.as_ref(), &x0, &cfg.solver_config(), None).map_err(|e| CliError::Runtime(e.to_string()))?;
    let f = r.run.f_gamma;
    Ok((r.run, f))
}

fn start_point(file: &SolveConfig, n: usize) -> CliResult<Vec<f64>> {
    match &file.x0 {
        Some(x) if x.len() != n => Err(usage(format!("x0 has length {}, problem has dimension {n}", x.len()))),
        Some(x) => Ok(x.clone()),
        None => Ok(vec![0.0; n]),
    }
}
