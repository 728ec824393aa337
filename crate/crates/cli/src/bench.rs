use std::path::{Path, PathBuf};

use smoothcd::harness::{run_experiment, ExperimentSpec};
use smoothcd::smoothing::GammaSpec;

use crate::solve::apply_overrides;
use crate::{CliError, CliResult, Overrides};

pub fn run(spec_path: &Path, out: Option<PathBuf>, o: &Overrides) -> CliResult<()> {
    let mut spec = ExperimentSpec::load(spec_path)
        .map_err(|e| CliError::Usage(format!("{}: {e}", spec_path.display())))?;
    match out {
        Some(dir) => spec.output = dir,
        None if spec.output.is_relative() => {
            spec.output = spec_path.parent().unwrap_or(Path::new(".")).join(&spec.output);
        }
        None => {}
    }
    if let Some(g) = o.gamma {
        spec.gamma = Some(GammaSpec::Value(g));
    }
    if let Some(s) = o.seed {
        spec.problem.seed = s;
    }
    for cfg in &mut spec.solvers {
        apply_overrides(cfg, o);
    }
    spec.validate()?;

    let res = run_experiment(&spec)?;
    println!("{:<8} {:<4} {:<8} {:>6} {:>10} {:>12} {:>8}", "smooth", "idx", "solver", "runs", "success", "med_epochs", "failed");
    for g in &res.summary.groups {
        let med = g.median_epochs_to_tol.map_or("-".to_string(), |v| format!("{v}"));
        println!(
            "{:<8} {:<4} {:<8} {:>6} {:>10.2} {:>12} {:>8}",
            g.smoothing.as_str(),
            g.solver_index,
            g.solver,
            g.runs,
            g.success_rate,
            med,
            g.failures.len()
        );
        for f in &g.failures {
            eprintln!("  repeat {}: {}", f.repeat, f.error);
        }
    }
    println!("summary: {}", res.summary_file.display());
    if res.all_completed() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("{} of {} runs failed", res.summary.failed_runs, res.summary.total_runs)))
    }
}
