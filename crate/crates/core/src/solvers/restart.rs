use super::accd::accd_segment;
use super::constants::doubling_period;
use super::{Driver, Observer, RunResult, SolverConfig};
use crate::error::{Error, Result};
use crate::smoothing::SmoothSurrogate;

/// Restart periods in coordinate steps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestartSchedule {
    Fixed(u64),
    /// `K_r = 2^{v(r+1)} K0` with `v` the 2-adic valuation.
    Doubling(u64),
}

impl RestartSchedule {
    pub fn period(&self, round: u64) -> u64 {
        match *self {
            RestartSchedule::Fixed(k) => k,
            RestartSchedule::Doubling(k0) => doubling_period(k0, round),
        }
    }
}

/// Accelerated coordinate descent restarted after each period, keeping the
/// better of the restart point and the round's output.
pub fn restart_run<'a, S: SmoothSurrogate + ?Sized>(
    s: &'a S,
    x0: &[f64],
    cfg: &'a SolverConfig,
    schedule: RestartSchedule,
    observer: Option<Observer<'a>>,
) -> Result<RunResult> {
    if schedule.period(0) == 0 {
        return Err(Error::config("restart period must be at least 1"));
    }
    let mut d = Driver::new(s, cfg, cfg.alpha / 2.0, observer)?;
    let mut best = s.state(x0)?;
    let mut best_val = s.value(&best)?;
    let mut rounds = vec![best_val];
    if d.check(&best)? {
        return d.finish(&best, rounds);
    }
    let mut r = 0;
    while !d.exhausted() {
        let out = accd_segment(&mut d, best.clone(), schedule.period(r))?;
        let out = s.state(&out.x)?;
        let v = s.value(&out)?;
        if !v.is_finite() {
            return Err(d.failure(&out, format!("non-finite surrogate value after round {r}")));
        }
        let accepted = v <= best_val;
        if accepted {
            best = out;
            best_val = v;
        }
        rounds.push(best_val);
        r += 1;
        if d.converged {
            if accepted {
                break;
            }
            d.converged = false;
        }
    }
    if d.trace.last().map(|t| t.k) == Some(d.k) {
        d.trace.pop();
    }
    d.finish(&best, rounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::accd_run;
    use crate::solvers::testkit::{chain, Quadratic};
    use crate::block::BlockPartition;

    #[test]
    fn round_values_never_increase() {
        let q = Quadratic::new(&chain(10, 0.49), BlockPartition::scalar(10));
        let cfg = SolverConfig { max_epochs: 5000, grad_tol: 1e-8, seed: 4, ..Default::default() };
        let r = restart_run(&q, &[1.0; 10], &cfg, RestartSchedule::Fixed(25), None).unwrap();
        assert!(r.converged);
        for w in r.round_values.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn single_long_round_is_plain_accd() {
        let q = Quadratic::new(&chain(3, 0.3), BlockPartition::scalar(3));
        let cfg = SolverConfig { max_epochs: 40, grad_tol: 1e-300, seed: 2, ..Default::default() };
        let a = accd_run(&q, &[1.0, 1.0, 1.0], &cfg, None).unwrap();
        let r = restart_run(&q, &[1.0, 1.0, 1.0], &cfg, RestartSchedule::Fixed(1000), None).unwrap();
        assert_eq!(a.x, r.x);
        assert_eq!(a.trace.len(), r.trace.len());
    }

    #[test]
    fn doubling_periods() {
        let s = RestartSchedule::Doubling(5);
        let p: Vec<u64> = (0..7).map(|r| s.period(r)).collect();
        assert_eq!(p, vec![5, 10, 5, 20, 5, 10, 5]);
    }
}
