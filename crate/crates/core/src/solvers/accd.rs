use super::{Driver, Observer, RunResult, SolverConfig};
use crate::error::{Error, Result};
use crate::smoothing::{SmoothSurrogate, State};

/// One update of the estimate-sequence scalars.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AccdParams {
    pub a: f64,
    pub a_sum: f64,
    pub b_sum: f64,
    pub alpha_k: f64,
    pub beta_k: f64,
}

/// Solves `S²a² = (A + a)(B + σa)` for its positive root `a` and returns the
/// updated `A_{k+1} = A + a`, `B_{k+1} = B + σa` and the mixing weights
/// `α_k = a/A_{k+1}`, `β_k = σa/B_{k+1}`.
pub fn accd_step_params(a_sum: f64, b_sum: f64, s: f64, sigma: f64) -> Result<AccdParams> {
    if !(a_sum >= 0.0 && b_sum >= 1.0 && s > 0.0 && sigma >= 0.0) {
        return Err(Error::arg(format!(
            "need A ≥ 0, B ≥ 1, S > 0, σ ≥ 0; got A = {a_sum}, B = {b_sum}, S = {s}, σ = {sigma}"
        )));
    }
    let lead = s * s - sigma;
    if !(lead > 0.0) {
        return Err(Error::arg(format!("σ = {sigma} must be below S² = {}", s * s)));
    }
    let mid = b_sum + sigma * a_sum;
    let disc = mid * mid + 4.0 * lead * a_sum * b_sum;
    let a = (mid + disc.sqrt()) / (2.0 * lead);
    let a_next = a_sum + a;
    let b_next = b_sum + sigma * a;
    Ok(AccdParams { a, a_sum: a_next, b_sum: b_next, alpha_k: a / a_next, beta_k: sigma * a / b_next })
}

/// Runs at most `steps` accelerated steps from `start`, stopping early on
/// convergence or when the driver's budget is spent.
pub(crate) fn accd_segment<S: SmoothSurrogate + ?Sized>(d: &mut Driver<'_, S>, start: State, steps: u64) -> Result<State> {
    let s = d.s;
    let lip = s.coord_lipschitz();
    let alpha = d.cfg.alpha;
    let sigma = d.cfg.sigma;
    let s_beta: f64 = lip.iter().map(|l| l.powf(alpha / 2.0)).sum();
    let mut x = start;
    let mut nu = x.clone();
    let (mut a_sum, mut b_sum) = (0.0, 1.0);
    let stop = d.k + steps;
    while d.k < stop && !d.exhausted() {
        let p = accd_step_params(a_sum, b_sum, s_beta, sigma)?;
        a_sum = p.a_sum;
        b_sum = p.b_sum;
        let den = 1.0 - p.alpha_k * p.beta_k;
        let y = State::combine((1.0 - p.alpha_k) / den, &x, p.alpha_k * (1.0 - p.beta_k) / den, &nu);

        let i = d.draw();
        let g = d.block_grad(&y, i)?;
        let li = lip[i];
        let h: Vec<f64> = g.iter().map(|v| -v / li).collect();
        let w = p.a / (li.powf(1.0 - alpha) * b_sum * d.sampler.probability(i));
        let hv: Vec<f64> = g.iter().map(|v| -w * v).collect();

        nu.blend(1.0 - p.beta_k, p.beta_k, &y);
        s.apply_step(&mut nu, i, &hv);
        x = y;
        s.apply_step(&mut x, i, &h);
        d.k += 1;
        d.notify(i, &x);
        if d.at_checkpoint() {
            x = s.state(&x.x)?;
            nu = s.state(&nu.x)?;
            if d.check(&x)? {
                break;
            }
        }
    }
    Ok(x)
}

/// Accelerated randomized block coordinate descent. Blocks are drawn with
/// probability `∝ L_i^{α/2}`, which is the distribution the `ν` update is
/// unbiased for.
pub fn accd_run<'a, S: SmoothSurrogate + ?Sized>(
    s: &'a S,
    x0: &[f64],
    cfg: &'a SolverConfig,
    observer: Option<Observer<'a>>,
) -> Result<RunResult> {
    let mut d = Driver::new(s, cfg, cfg.alpha / 2.0, observer)?;
    let x = s.state(x0)?;
    if d.check(&x)? {
        return d.finish(&x, Vec::new());
    }
    let budget = d.budget;
    let x = accd_segment(&mut d, x, budget)?;
    d.finish(&x, Vec::new())
}
