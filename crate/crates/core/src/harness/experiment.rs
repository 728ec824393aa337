use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generators::{gen_identity_l1, gen_quadratic_l1, gen_quadratic_l2, gen_quadratic_tv, Instance};
use crate::error::{Error, Result};
use crate::smoothing::{build_surrogate, resolve_gamma, surrogate_check, CheckOptions, GammaSpec, SmoothSurrogate, SmoothingKind};
use crate::solvers::{run, trace_csv_string, RunConfig, RunResult};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SMOOTHCD_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    QuadraticL2,
    QuadraticL1,
    QuadraticTv,
    IdentityL1,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub generator: Generator,
    pub n: usize,
    /// Rows of the design; ignored by the square generators.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default)]
    pub seed: u64,
}

impl ProblemSpec {
    pub fn generate(&self, seed: u64) -> Result<Instance> {
        let m = self.m.unwrap_or(self.n);
        match self.generator {
            Generator::QuadraticL2 => gen_quadratic_l2(self.n, m, self.lambda, seed),
            Generator::QuadraticL1 => gen_quadratic_l1(self.n, m, self.lambda, seed),
            Generator::QuadraticTv => gen_quadratic_tv(self.n, self.lambda, seed),
            Generator::IdentityL1 => gen_identity_l1(self.n, self.lambda, seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub problem: ProblemSpec,
    pub smoothings: Vec<SmoothingKind>,
    pub solvers: Vec<RunConfig>,
    #[serde(default = "one")]
    pub repeats: usize,
    pub output: PathBuf,
    /// Applied to every smoothing; per-kind defaults otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GammaSpec>,
    /// Run a reduced surrogate check on every generated problem first.
    #[serde(default = "yes")]
    pub verify: bool,
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

impl ExperimentSpec {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: ExperimentSpec = toml::from_str(s)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Reads TOML when the extension is `.toml`, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml_str(&text)
        } else {
            Self::from_json_str(&text)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        if p.n == 0 || p.m == Some(0) {
            return Err(Error::config("problem dimensions must be at least 1"));
        }
        if !(p.lambda >= 0.0 && p.lambda.is_finite()) {
            return Err(Error::config("lambda must be nonnegative"));
        }
        if self.repeats == 0 {
            return Err(Error::config("repeats must be at least 1"));
        }
        if self.smoothings.is_empty() || self.solvers.is_empty() {
            return Err(Error::config("at least one smoothing and one solver are required"));
        }
        for s in &self.solvers {
            s.solver_config().validate()?;
        }
        Ok(())
    }
}

/// Reduced check run before solving; the full one lives in the test suites.
pub fn quick_check_options(seed: u64) -> CheckOptions {
    CheckOptions { trials: 20, gradient_trials: 10, lipschitz_trials: 50, cache_steps: 50, seed, ..CheckOptions::default() }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub smoothing: SmoothingKind,
    pub solver_index: usize,
    pub repeat: usize,
    pub gamma: f64,
    pub inexact_prox: bool,
    pub result: std::result::Result<RunResult, String>,
    pub trace_file: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunFailure {
    pub repeat: usize,
    pub error: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroupSummary {
    pub smoothing: SmoothingKind,
    pub solver: String,
    pub solver_index: usize,
    pub inexact_prox: bool,
    pub runs: usize,
    /// Median over converged runs; `null` when none converged.
    pub median_epochs_to_tol: Option<f64>,
    pub median_time_s: Option<f64>,
    pub success_rate: f64,
    /// Per-repeat epochs, `null` for runs that failed or did not converge.
    pub epochs_to_tol: Vec<Option<f64>>,
    pub failures: Vec<RunFailure>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub problem: ProblemSpec,
    pub repeats: usize,
    pub total_runs: usize,
    pub failed_runs: usize,
    pub groups: Vec<GroupSummary>,
}

#[derive(Debug)]
pub struct ExperimentResult {
    pub runs: Vec<RunOutcome>,
    pub summary: Summary,
    pub summary_file: PathBuf,
}

impl ExperimentResult {
    pub fn all_completed(&self) -> bool {
        self.summary.failed_runs == 0
    }
}

pub fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[k] } else { 0.5 * (v[k - 1] + v[k]) })
}

/// Worker count from the environment, falling back to rayon's default.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()).filter(|n| *n > 0)
}

pub fn trace_file_name(smoothing: SmoothingKind, solver_index: usize, cfg: &RunConfig, repeat: usize, inexact: bool) -> String {
    let tag = if inexact { "-inexact-prox" } else { "" };
    format!("{}{}-{}-{}-r{}.csv", smoothing, tag, solver_index, cfg.solver.as_str(), repeat)
}

struct Prepared {
    surrogate: Box<dyn SmoothSurrogate>,
    x0: Vec<f64>,
    gamma: f64,
}

fn prepare(spec: &ExperimentSpec, inst: &Instance, kind: SmoothingKind, seed: u64) -> Result<Prepared> {
    let gamma = resolve_gamma(spec.gamma, kind, &inst.composite, inst.saddle.as_deref())?;
    let surrogate = build_surrogate(kind, &inst.composite, inst.saddle.as_ref(), gamma)?;
    if spec.verify {
        let objective: Box<dyn Fn(&[f64]) -> f64> = match (kind, &inst.saddle) {
            (SmoothingKind::Ns, Some(sp)) => {
                let sp = Arc::clone(sp);
                Box::new(move |x| sp.objective(x))
            }
            _ => {
                let p = Arc::clone(&inst.composite);
                Box::new(move |x| p.objective(x))
            }
        };
        let report = surrogate_check(surrogate.as_ref(), objective.as_ref(), &quick_check_options(seed))?;
        if !report.passed() {
            return Err(Error::Numerical {
                iteration: 0,
                message: format!("{kind} surrogate failed its contract check: {report:?}"),
            });
        }
    }
    Ok(Prepared { surrogate, x0: inst.x0.clone(), gamma })
}

/// Runs the smoothing × solver grid over `repeats` problem seeds, writing one
/// trace CSV per completed run and `summary.json` under `spec.output`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    fs::create_dir_all(&spec.output)?;

    let mut prepared: Vec<Vec<std::result::Result<Prepared, String>>> = Vec::with_capacity(spec.repeats);
    for r in 0..spec.repeats {
        let seed = spec.problem.seed.wrapping_add(r as u64);
        let inst = spec.problem.generate(seed)?;
        prepared.push(
            spec.smoothings.iter().map(|&k| prepare(spec, &inst, k, seed).map_err(|e| e.to_string())).collect(),
        );
    }

    let mut jobs = Vec::new();
    for r in 0..spec.repeats {
        for (si, &kind) in spec.smoothings.iter().enumerate() {
            for (ci, cfg) in spec.solvers.iter().enumerate() {
                let mut cfg = cfg.clone();
                cfg.seed = cfg.seed.wrapping_add(r as u64);
                jobs.push((r, si, kind, ci, cfg));
            }
        }
    }

    let execute = || -> Vec<RunOutcome> {
        jobs.par_iter()
            .map(|(r, si, kind, ci, cfg)| {
                let (result, gamma, inexact) = match &prepared[*r][*si] {
                    Ok(p) => (
                        run(p.surrogate.as_ref(), &p.x0, cfg).map_err(|e| e.to_string()),
                        p.gamma,
                        p.surrogate.inexact(),
                    ),
                    Err(e) => (Err(e.clone()), f64::NAN, false),
                };
                RunOutcome {
                    smoothing: *kind,
                    solver_index: *ci,
                    repeat: *r,
                    gamma,
                    inexact_prox: inexact,
                    result,
                    trace_file: None,
                }
            })
            .collect()
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap() {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut runs = pool.install(execute);

    for o in runs.iter_mut() {
        if let Ok(res) = &o.result {
            let name = trace_file_name(o.smoothing, o.solver_index, &spec.solvers[o.solver_index], o.repeat, o.inexact_prox);
            let path = spec.output.join(name);
            fs::write(&path, trace_csv_string(&res.trace))?;
            o.trace_file = Some(path);
        }
    }

    let summary = summarize(spec, &runs);
    let summary_file = spec.output.join("summary.json");
    fs::write(&summary_file, serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(ExperimentResult { runs, summary, summary_file })
}

fn summarize(spec: &ExperimentSpec, runs: &[RunOutcome]) -> Summary {
    let mut groups = Vec::new();
    for &kind in &spec.smoothings {
        for (ci, cfg) in spec.solvers.iter().enumerate() {
            let mine: Vec<&RunOutcome> = runs.iter().filter(|o| o.smoothing == kind && o.solver_index == ci).collect();
            let epochs_to_tol: Vec<Option<f64>> = mine
                .iter()
                .map(|o| o.result.as_ref().ok().filter(|r| r.converged).map(|r| r.epochs))
                .collect();
            let mut eps: Vec<f64> = epochs_to_tol.iter().flatten().copied().collect();
            let mut times: Vec<f64> = mine
                .iter()
                .filter_map(|o| o.result.as_ref().ok().filter(|r| r.converged))
                .filter_map(|r| r.trace.last().map(|t| t.time_s))
                .collect();
            let failures = mine
                .iter()
                .filter_map(|o| o.result.as_ref().err().map(|e| RunFailure { repeat: o.repeat, error: e.clone() }))
                .collect();
            groups.push(GroupSummary {
                smoothing: kind,
                solver: cfg.solver.as_str().to_string(),
                solver_index: ci,
                inexact_prox: mine.iter().any(|o| o.inexact_prox),
                runs: mine.len(),
                median_epochs_to_tol: median(&mut eps),
                median_time_s: median(&mut times),
                success_rate: eps.len() as f64 / mine.len().max(1) as f64,
                epochs_to_tol,
                failures,
            });
        }
    }
    Summary {
        problem: spec.problem.clone(),
        repeats: spec.repeats,
        total_runs: runs.len(),
        failed_runs: runs.iter().filter(|o| o.result.is_err()).count(),
        groups,
    }
}
