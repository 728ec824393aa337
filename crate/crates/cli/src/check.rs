use smoothcd::bregman::{rrcd_run, Kernel, PowerKernel, RelativeObjective};
use smoothcd::harness::{gen_identity_l1, gen_quadratic_l1, gen_quartic, reference_solve, Instance};
use smoothcd::prox::{brute_force_prox, prox_tv_1d};
use smoothcd::smoothing::{
    build_surrogate, default_gamma, surrogate_check, CheckOptions, ScaledLipschitz, SmoothingKind, SurrogateReport,
};
use smoothcd::solvers::{
    doubling_schedule, growth_constant_fb, growth_constant_me, growth_constant_ns, restart_period, run as run_solver,
    RunConfig, SolverConfig, SolverKind,
};
use smoothcd::{Pcg64, ProxOracle, SmoothSurrogate};

use crate::{CliError, CliResult};

pub const SUITES: [&str; 5] = ["prox", "smoothing", "lipschitz", "solvers", "bregman"];

struct SuiteOutcome {
    /// Largest violation divided by its tolerance; the suite passes at ≤ 1.
    ratio: f64,
    detail: String,
}

fn runtime(e: smoothcd::Error) -> CliError {
    CliError::Runtime(e.to_string())
}

pub fn run(suite: Option<&str>, seed: u64, lipschitz_scale: f64) -> CliResult<()> {
    let selected: Vec<&str> = match suite {
        None | Some("all") => SUITES.to_vec(),
        Some(s) if SUITES.contains(&s) => vec![s],
        Some(s) => {
            return Err(CliError::Usage(format!("unknown suite {s:?}; valid choices are {}, all", SUITES.join(", "))))
        }
    };
    if !(lipschitz_scale > 0.0) {
        return Err(CliError::Usage("lipschitz-scale must be positive".into()));
    }
    let mut failed = Vec::new();
    for name in selected {
        let out = match name {
            "prox" => prox_suite(seed),
            "smoothing" => smoothing_suite(seed),
            "lipschitz" => lipschitz_suite(seed, lipschitz_scale),
            "solvers" => solvers_suite(seed),
            _ => bregman_suite(seed),
        }
        .map_err(runtime)?;
        let pass = out.ratio <= 1.0;
        println!("{} {name}: max violation/tolerance {:.3e}; {}", if pass { "PASS" } else { "FAIL" }, out.ratio, out.detail);
        if !pass {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!("failed suites: {}", failed.join(", "))))
    }
}

fn prox_suite(seed: u64) -> smoothcd::Result<SuiteOutcome> {
    const TOL: f64 = 1e-5;
    let mut rng = Pcg64::seed_from(seed ^ 0x9e37);
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 1..=2usize {
        for _ in 0..10 {
            let zoo = [
                ProxOracle::L2Norm { lambda: rng.uniform(0.1, 2.0) },
                ProxOracle::L1Norm { lambda: rng.uniform(0.1, 2.0) },
                ProxOracle::Ball2 { radius: rng.uniform(0.2, 2.0) },
                ProxOracle::Ball1 { radius: rng.uniform(0.2, 2.0), center: Vec::new() },
                ProxOracle::Tv1d { lambda: rng.uniform(0.1, 2.0) },
                ProxOracle::Power { r: rng.uniform(0.2, 2.0), weight: rng.uniform(0.1, 1.0) },
            ];
            for oracle in &zoo {
                let x: Vec<f64> = rng.normal_vec(n).iter().map(|v| 1.5 * v).collect();
                let gamma = rng.uniform(0.2, 2.0);
                let fast = oracle.prox(gamma, &x)?;
                let slow = brute_force_prox(|u| oracle.value(u), gamma, &x)?;
                let err = fast.iter().zip(&slow).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                worst = worst.max(err);
                count += 1;
            }
        }
    }
    // zero weight leaves the input unchanged
    let mut tv = 0.0f64;
    for _ in 0..50 {
        let y = rng.normal_vec(8);
        tv = tv.max(prox_tv_1d(0.0, &y).iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max));
    }
    Ok(SuiteOutcome {
        ratio: worst.max(tv) / TOL,
        detail: format!("{count} brute-force comparisons, max error {worst:.1e}"),
    })
}

fn instance(seed: u64) -> smoothcd::Result<Instance> {
    gen_quadratic_l1(20, 15, 0.5, seed)
}

fn surrogates(inst: &Instance) -> smoothcd::Result<Vec<(SmoothingKind, Box<dyn SmoothSurrogate>)>> {
    SmoothingKind::ALL
        .iter()
        .map(|&k| {
            let g = default_gamma(k, &inst.composite, inst.saddle.as_deref())?;
            Ok((k, build_surrogate(k, &inst.composite, inst.saddle.as_ref(), g)?))
        })
        .collect()
}

fn smoothing_suite(seed: u64) -> smoothcd::Result<SuiteOutcome> {
    let inst = instance(seed)?;
    let opts = CheckOptions { trials: 100, gradient_trials: 50, lipschitz_trials: 0, cache_steps: 500, seed, ..CheckOptions::default() };
    let mut ratio = 0.0f64;
    let mut detail = Vec::new();
    for (k, s) in surrogates(&inst)? {
        let rep = surrogate_check(s.as_ref(), &|x| s.objective(x), &opts)?;
        let r = (rep.sandwich / SurrogateReport::SANDWICH_TOL)
            .max(rep.gradient / SurrogateReport::GRADIENT_TOL)
            .max(rep.convexity / SurrogateReport::CONVEXITY_TOL)
            .max(rep.cache / SurrogateReport::CACHE_TOL);
        ratio = ratio.max(r);
        detail.push(format!("{k} sandwich {:.1e} gradient {:.1e} cache {:.1e}", rep.sandwich, rep.gradient, rep.cache));
    }
    Ok(SuiteOutcome { ratio, detail: detail.join("; ") })
}

fn lipschitz_suite(seed: u64, scale: f64) -> smoothcd::Result<SuiteOutcome> {
    let inst = instance(seed)?;
    let opts = CheckOptions { trials: 0, gradient_trials: 0, lipschitz_trials: 1000, cache_steps: 0, seed, ..CheckOptions::default() };
    let mut ratio = 0.0f64;
    let mut detail = Vec::new();
    for (k, s) in surrogates(&inst)? {
        let scaled = ScaledLipschitz::new(s.as_ref(), scale);
        let rep = surrogate_check(&scaled, &|x| s.objective(x), &opts)?;
        ratio = ratio.max(rep.lipschitz.max(rep.cocoercivity) / SurrogateReport::LIPSCHITZ_TOL);
        detail.push(format!("{k} {:.1e}/{:.1e}", rep.lipschitz, rep.cocoercivity));
    }
    Ok(SuiteOutcome { ratio, detail: format!("block bound/cocoercivity: {}", detail.join(", ")) })
}

fn solvers_suite(seed: u64) -> smoothcd::Result<SuiteOutcome> {
    let exact = [
        growth_constant_me(2.0, 1.0, 1.0, None)? == 0.5,
        growth_constant_me(1.0, 1.0, 1.0, Some(2.0))? == 1.0 / 9.0,
        growth_constant_fb(2.0, 1.0, 0.5, 1.0, 1.0, None)? == 0.5,
        growth_constant_ns(2.0, 1.0, 1.0, None)? == 0.25,
        growth_constant_ns(1.0, 1.0, 1.0, Some(2.0))? == 0.5,
        restart_period(10, 2.0, 1.0, (-2f64).exp(), 0.0)? == 55,
        restart_period(1, 2.0, 4.0, 1.0, 0.0)? == 1,
        restart_period(1, 1.0, 1.0, 1.0, 4.0)? == 4,
        doubling_schedule(5, 7) == [5, 10, 5, 20, 5, 10, 5],
    ];
    let mismatches = exact.iter().filter(|ok| !**ok).count();

    const TOL: f64 = 1e-6;
    let inst = gen_identity_l1(10, 1.0, seed)?;
    let reference = reference_solve(&inst.composite)?;
    let s = build_surrogate(SmoothingKind::Fb, &inst.composite, None, 0.5)?;
    let mut gap = 0.0f64;
    for solver in [SolverKind::Cd, SolverKind::Accd, SolverKind::Restart] {
        let cfg = RunConfig { tol: 1e-9, epochs: 5000, seed, ..RunConfig::new(solver) };
        let r = run_solver(s.as_ref(), &inst.x0, &cfg)?;
        let f = r.trace.last().map_or(f64::INFINITY, |t| t.f_orig_at_b);
        gap = gap.max((f - reference.f_star).abs() / (1.0 + reference.f_star.abs()));
    }
    let ratio = if mismatches > 0 { f64::INFINITY } else { gap / TOL };
    Ok(SuiteOutcome {
        ratio,
        detail: format!("{} constants, {mismatches} mismatches; cd/accd/restart objective gap {gap:.1e}", exact.len()),
    })
}

fn bregman_suite(seed: u64) -> smoothcd::Result<SuiteOutcome> {
    let kernel = PowerKernel::quartic();
    let (p, x0) = gen_quartic(6, 5, seed)?;
    let cfg = SolverConfig { max_epochs: 200, grad_tol: 1e-300, seed, trace_every: 50, ..SolverConfig::default() };
    let mut prev = p.value(&x0);
    let mut increase = 0.0f64;
    let mut obs = |st: &smoothcd::bregman::RrcdStep<'_>| {
        let v = p.value(st.x);
        increase = increase.max((v - prev) / (1.0 + prev.abs()));
        prev = v;
    };
    let r = rrcd_run(&p, &kernel, &x0, &cfg, Some(&mut obs))?;

    let mut rng = Pcg64::seed_from(seed ^ 0xb7e1);
    let mut rel = 0.0f64;
    for _ in 0..200 {
        let x: Vec<f64> = rng.normal_vec(p.dim()).iter().map(|v| 2.0 * v).collect();
        let i = rng.below(p.partition().count());
        let range = p.partition().range(i);
        let d = rng.normal_vec(range.len());
        let mut y = x.clone();
        y[range.clone()].iter_mut().zip(&d).for_each(|(a, b)| *a += b);
        let g = p.grad(&x);
        let lin: f64 = g[range.clone()].iter().zip(&d).map(|(a, b)| a * b).sum();
        let fx = p.value(&x);
        let upper = fx + lin + p.relative_constants()[i] * kernel.coord_bregman(&x, range, &d);
        rel = rel.max((p.value(&y) - upper).max(0.0) / (1.0 + fx.abs()));
    }
    let ratio = (increase / 1e-12).max(r.max_stationarity / 1e-8).max(r.max_root_residual / 1e-10).max(rel / 1e-10);
    Ok(SuiteOutcome {
        ratio,
        detail: format!(
            "descent {increase:.1e}, stationarity {:.1e}, root residual {:.1e}, relative smoothness {rel:.1e}",
            r.max_stationarity, r.max_root_residual
        ),
    })
}
