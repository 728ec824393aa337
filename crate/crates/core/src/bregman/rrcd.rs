use std::time::Instant;

use super::kernel::{stationarity_residual, Kernel};
use super::quartic::RelativeObjective;
use crate::block::{BlockSampler, LipschitzProfile};
use crate::error::{check_len, Error, Result};
use crate::linalg::norm2;
use crate::rng::Pcg64;
use crate::solvers::{RunResult, SolverConfig, TraceRecord};

/// Stationarity tolerance of each block subproblem, relative to `1 + ‖g_i‖`.
pub const STATIONARITY_TOL: f64 = 1e-8;
/// Tolerance on the relative residual of the scalar root equation.
pub const ROOT_TOL: f64 = 1e-10;

pub struct RrcdStep<'a> {
    pub k: u64,
    pub block: usize,
    /// Iterate after the step.
    pub x: &'a [f64],
    pub d: &'a [f64],
    pub stationarity: f64,
    pub root_residual: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct RrcdResult {
    pub run: RunResult,
    pub max_stationarity: f64,
    pub max_root_residual: f64,
}

/// Relative randomized coordinate descent: each step exactly minimizes the
/// block model `⟨∇_i F(x), d⟩ + L_i D_φ(x + U_i d, x)`.
pub fn rrcd_run<P, K>(
    p: &P,
    kernel: &K,
    x0: &[f64],
    cfg: &SolverConfig,
    mut observer: Option<&mut dyn FnMut(&RrcdStep<'_>)>,
) -> Result<RrcdResult>
where
    P: RelativeObjective + ?Sized,
    K: Kernel + ?Sized,
{
    cfg.validate()?;
    let part = p.partition();
    check_len(part.dim(), x0.len())?;
    let lip = p.relative_constants();
    let sampler = BlockSampler::new(&LipschitzProfile::new(lip.to_vec(), cfg.alpha)?);
    let mut rng = Pcg64::seed_from(cfg.seed);
    let blocks = part.count() as u64;
    let budget = blocks * cfg.max_epochs as u64;
    let every = blocks * cfg.trace_every as u64;
    let start = Instant::now();

    let mut x = x0.to_vec();
    let mut fc = p.cache(&x);
    let mut kc = kernel.cache(&x);
    let mut trace = Vec::new();
    let (mut max_stat, mut max_root) = (0.0f64, 0.0f64);

    let record = |x: &[f64], k: u64, trace: &mut Vec<TraceRecord>| -> Result<bool> {
        let f = p.value(x);
        let gn = norm2(&p.grad(x));
        if !f.is_finite() || !gn.is_finite() {
            return Err(Error::numerical(k as usize, format!("non-finite objective {f} or gradient norm {gn}")));
        }
        trace.push(TraceRecord {
            k,
            epoch: k as f64 / blocks as f64,
            time_s: start.elapsed().as_secs_f64(),
            f_gamma: f,
            f_orig_at_b: f,
            grad_norm: gn,
        });
        Ok(gn <= cfg.grad_tol)
    };

    let mut k = 0u64;
    let mut converged = record(&x, 0, &mut trace)?;
    while !converged && k < budget {
        let i = sampler.draw(&mut rng);
        let r = part.range(i);
        let g = p.block_grad(&x, &fc, i);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical(k as usize, format!("non-finite gradient in block {i}; ‖x‖ = {:e}", norm2(&x))));
        }
        let sol = kernel.solve_subproblem(&x, &kc, r.clone(), &g, lip[i])?;
        if let Some(res) = sol.root_residual {
            max_root = max_root.max(res);
            if !(res <= ROOT_TOL) {
                return Err(Error::numerical(k as usize, format!("root residual {res:e} in block {i}; x = {x:?}")));
            }
        }
        let old = kernel.block_grad(&x, &kc, r.clone());
        kernel.cache_step(&mut kc, &x, r.clone(), &sol.d);
        p.cache_step(&mut fc, i, &sol.d);
        for (xj, dj) in x[r.clone()].iter_mut().zip(&sol.d) {
            *xj += dj;
        }
        let new = kernel.block_grad(&x, &kc, r.clone());
        let stat = stationarity_residual(&g, lip[i], &new, &old);
        let scaled = stat / (1.0 + norm2(&g));
        max_stat = max_stat.max(scaled);
        if !(scaled <= STATIONARITY_TOL) {
            return Err(Error::numerical(
                k as usize,
                format!("subproblem stationarity {scaled:e} in block {i} exceeds {STATIONARITY_TOL:e}; x = {x:?}"),
            ));
        }
        k += 1;
        if let Some(obs) = observer.as_mut() {
            obs(&RrcdStep { k, block: i, x: &x, d: &sol.d, stationarity: scaled, root_residual: sol.root_residual });
        }
        if k % every == 0 {
            fc = p.cache(&x);
            kc = kernel.cache(&x);
            converged = record(&x, k, &mut trace)?;
        }
    }
    if trace.last().map(|t| t.k) != Some(k) {
        converged = record(&x, k, &mut trace)?;
    }
    let last = trace.last().cloned().expect("trace has a row");
    Ok(RrcdResult {
        run: RunResult {
            x,
            converged,
            iterations: k,
            epochs: k as f64 / blocks as f64,
            f_gamma: last.f_gamma,
            grad_norm: last.grad_norm,
            trace,
            round_values: Vec::new(),
        },
        max_stationarity: max_stat,
        max_root_residual: max_root,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::BlockPartition;
    use crate::bregman::{PowerKernel, QuarticProblem};
    use crate::linalg::Matrix;

    #[test]
    fn kernel_as_objective_is_solved_in_one_step() {
        // F = ¼‖x‖⁴ + ½‖x‖² itself with L = 1
        let one = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let p = QuarticProblem::new(one.clone(), Matrix::zeros(1, 1), vec![0.0], one, vec![0.0], BlockPartition::scalar(1))
            .unwrap()
            .with_constants(vec![1.0])
            .unwrap();
        let cfg = SolverConfig { max_epochs: 1, grad_tol: 1e-12, ..Default::default() };
        let r = rrcd_run(&p, &PowerKernel::quartic(), &[2.0], &cfg, None).unwrap();
        assert!(r.run.x[0].abs() < 1e-14);
        assert!(r.run.converged);
    }

    #[test]
    fn monotone_on_small_quartic() {
        let mut rng = Pcg64::seed_from(11);
        let n = 6;
        let rows = |rng: &mut Pcg64, m: usize| (0..m).map(|_| rng.normal_vec(n).iter().map(|v| 0.3 * v).collect()).collect::<Vec<Vec<f64>>>();
        let e = Matrix::from_rows(&rows(&mut rng, 3)).unwrap();
        let a = Matrix::from_rows(&rows(&mut rng, 4)).unwrap();
        let b = rng.normal_vec(4);
        let p = QuarticProblem::new(e, a, b, Matrix::identity(n), vec![0.0; n], BlockPartition::scalar(n)).unwrap();
        let mut vals = vec![p.value(&vec![0.0; n])];
        let mut obs = |s: &RrcdStep<'_>| vals.push(p.value(s.x));
        let cfg = SolverConfig { max_epochs: 500, grad_tol: 1e-6, seed: 3, ..Default::default() };
        let r = rrcd_run(&p, &PowerKernel::quartic(), &vec![0.0; n], &cfg, Some(&mut obs)).unwrap();
        assert!(r.run.converged);
        for w in vals.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
    }
}
