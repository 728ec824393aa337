use super::{Driver, Observer, RunResult, SolverConfig};
use crate::error::Result;
use crate::smoothing::SmoothSurrogate;

/// Randomized block coordinate descent with step `1/L_i`.
pub fn cd_run<'a, S: SmoothSurrogate + ?Sized>(
    s: &'a S,
    x0: &[f64],
    cfg: &'a SolverConfig,
    observer: Option<Observer<'a>>,
) -> Result<RunResult> {
    let mut d = Driver::new(s, cfg, cfg.alpha, observer)?;
    let lip = s.coord_lipschitz();
    let mut x = s.state(x0)?;
    d.check(&x)?;
    while !d.converged && !d.exhausted() {
        let i = d.draw();
        let g = d.block_grad(&x, i)?;
        let h: Vec<f64> = g.iter().map(|v| -v / lip[i]).collect();
        s.apply_step(&mut x, i, &h);
        d.k += 1;
        d.notify(i, &x);
        if d.at_checkpoint() {
            x = s.state(&x.x)?;
            d.check(&x)?;
        }
    }
    d.finish(&x, Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block::BlockPartition;
    use crate::prox::ProxOracle;
    use crate::smoothing::MoreauSurrogate;
    use crate::solvers::testkit::Quadratic;
    use crate::solvers::StepInfo;

    #[test]
    fn huber_descent_reaches_tolerance() {
        let m = MoreauSurrogate::of_oracle(ProxOracle::L1Norm { lambda: 1.0 }, BlockPartition::scalar(1), 1.0).unwrap();
        let cfg = SolverConfig { grad_tol: 1e-3, max_epochs: 50, ..Default::default() };
        let r = cd_run(&m, &[2.0], &cfg, None).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 50);
        for w in r.trace.windows(2) {
            assert!(w[1].f_gamma <= w[0].f_gamma);
        }
    }

    #[test]
    fn quadratic_single_step() {
        let q = Quadratic::diagonal(&[1.0]);
        let mut xs = Vec::new();
        let mut obs = |st: &StepInfo<'_>| xs.push(st.x.x[0]);
        let cfg = SolverConfig { max_epochs: 1, grad_tol: 1e-12, ..Default::default() };
        let r = cd_run(&q, &[1.0], &cfg, Some(&mut obs)).unwrap();
        assert_eq!(xs, vec![0.0]);
        assert!(r.converged);
    }
}
