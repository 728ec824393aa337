//! Rate constants for growth-condition analyses and restart periods.

use crate::error::{Error, Result};

fn check_q(q: f64) -> Result<()> {
    if !(1.0..=2.0).contains(&q) {
        return Err(Error::arg(format!("growth exponent q must lie in [1, 2], got {q}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::arg(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn radius_term(q: f64, r: Option<f64>) -> Result<f64> {
    let r = r.ok_or_else(|| Error::arg(format!("q = {q} < 2 needs a level-set radius R")))?;
    check_positive("R", r)?;
    Ok(r.powf(2.0 - q))
}

/// Restart period `⌈√(4N²δ0^{(2−q̄)/q̄} / (κ̄^{2/q̄} α))⌉` guaranteeing an
/// expected contraction by `alpha` per round.
pub fn restart_period(n_blocks: usize, q_bar: f64, kappa_bar: f64, alpha: f64, delta0: f64) -> Result<u64> {
    check_q(q_bar)?;
    check_positive("kappa_bar", kappa_bar)?;
    if n_blocks == 0 {
        return Err(Error::arg("N must be at least 1"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::arg(format!("contraction factor must lie in (0, 1], got {alpha}")));
    }
    let n = n_blocks as f64;
    let gap_term = if q_bar == 2.0 {
        1.0
    } else {
        if !(delta0 >= 0.0 && delta0.is_finite()) {
            return Err(Error::arg(format!("delta0 must be nonnegative, got {delta0}")));
        }
        delta0.powf((2.0 - q_bar) / q_bar)
    };
    let k = (4.0 * n * n * gap_term / (kappa_bar.powf(2.0 / q_bar) * alpha)).sqrt().ceil();
    Ok((k as u64).max(1))
}

pub(crate) fn doubling_period(k0: u64, round: u64) -> u64 {
    k0 << (round + 1).trailing_zeros()
}

/// First `count` periods of the doubling ("ruler") schedule from `k0`.
pub fn doubling_schedule(k0: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|r| doubling_period(k0, r)).collect()
}

/// Growth constant inherited by the Moreau envelope.
pub fn growth_constant_me(q: f64, kappa: f64, gamma: f64, r: Option<f64>) -> Result<f64> {
    check_q(q)?;
    check_positive("kappa", kappa)?;
    check_positive("gamma", gamma)?;
    if q == 2.0 {
        return Ok(kappa * gamma / (gamma * kappa + 1.0));
    }
    let rt = radius_term(q, r)?;
    let den = kappa * gamma + rt;
    Ok(kappa * kappa * gamma * gamma / (den * den))
}

/// Growth constant inherited by the forward-backward envelope; needs `γL < 1`.
pub fn growth_constant_fb(q: f64, kappa: f64, gamma: f64, l: f64, l_max: f64, r: Option<f64>) -> Result<f64> {
    check_q(q)?;
    check_positive("kappa", kappa)?;
    check_positive("gamma", gamma)?;
    check_positive("L", l)?;
    check_positive("L_max", l_max)?;
    let slack = 1.0 - gamma * l;
    if !(slack > 0.0) {
        return Err(Error::arg(format!("need γL < 1, got γL = {}", gamma * l)));
    }
    if q == 2.0 {
        return Ok(kappa * slack / ((gamma * kappa + slack) * l_max));
    }
    let rt = radius_term(q, r)?;
    let den = kappa * gamma + rt * slack;
    Ok(kappa * kappa * gamma * slack / (den * den * l_max))
}

/// Growth constant of the Nesterov-smoothed function: `κ/(2q L_max^{q/2})`
/// near the solution set, or `κ/(q L_max R^{2−q})` on a level set of radius `R`.
pub fn growth_constant_ns(q: f64, kappa: f64, l_max: f64, r: Option<f64>) -> Result<f64> {
    check_q(q)?;
    check_positive("kappa", kappa)?;
    check_positive("L_max", l_max)?;
    match r {
        None => Ok(kappa / (2.0 * q * l_max.powf(q / 2.0))),
        Some(r) => {
            check_positive("R", r)?;
            Ok(kappa / (q * l_max * r.powf(2.0 - q)))
        }
    }
}

/// Per-step contraction factor of plain coordinate descent under growth.
pub fn contraction_c1(kappa_bar: f64, q_bar: f64, n_blocks: usize, delta0: f64) -> Result<f64> {
    check_q(q_bar)?;
    check_positive("kappa_bar", kappa_bar)?;
    if n_blocks == 0 {
        return Err(Error::arg("N must be at least 1"));
    }
    let n = n_blocks as f64;
    let eta = kappa_bar.min(kappa_bar.powf(2.0 / q_bar));
    let scale = n * (1.0 + kappa_bar);
    let first = if q_bar == 2.0 {
        1.0 - kappa_bar / scale
    } else {
        check_positive("Delta0", delta0)?;
        1.0 - kappa_bar * delta0.powf((q_bar - 2.0) / 2.0) / scale
    };
    Ok(first.max(1.0 - eta / scale))
}

/// The constants of a growth analysis gathered in one place.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RateConstants {
    pub kappa_bar: f64,
    pub q_bar: f64,
    pub eta: f64,
    /// `max_k ½‖x_k − x̄_k‖²` in the `L`-weighted norm.
    pub radius: f64,
    pub delta0: f64,
    pub c1: f64,
    pub k_alpha: u64,
}

impl RateConstants {
    /// `gap0 = F_γ(x0) − F*`; `alpha` is the per-round restart contraction.
    pub fn new(kappa_bar: f64, q_bar: f64, n_blocks: usize, gap0: f64, radius: f64, alpha: f64) -> Result<Self> {
        let delta0 = gap0 + radius;
        Ok(RateConstants {
            kappa_bar,
            q_bar,
            eta: kappa_bar.min(kappa_bar.powf(2.0 / q_bar)),
            radius,
            delta0,
            c1: contraction_c1(kappa_bar, q_bar, n_blocks, delta0)?,
            k_alpha: restart_period(n_blocks, q_bar, kappa_bar, alpha, gap0)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn restart_period_examples() {
        assert_eq!(restart_period(10, 2.0, 1.0, (-2f64).exp(), 0.0).unwrap(), 55);
        assert_eq!(restart_period(1, 2.0, 4.0, 1.0, 0.0).unwrap(), 1);
        assert_eq!(restart_period(1, 1.0, 1.0, 1.0, 4.0).unwrap(), 4);
        assert!(restart_period(1, 2.0, 0.0, 0.5, 0.0).is_err());
        assert!(restart_period(1, 2.5, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn doubling_examples() {
        let s = doubling_schedule(5, 7);
        assert_eq!(s, vec![5, 10, 5, 20, 5, 10, 5]);
        for j in 0..3u32 {
            assert_eq!(s[(1usize << j) - 1], 5 << j);
        }
    }

    #[test]
    fn growth_examples() {
        assert_eq!(growth_constant_me(2.0, 1.0, 1.0, None).unwrap(), 0.5);
        assert_eq!(growth_constant_me(1.0, 1.0, 1.0, Some(2.0)).unwrap(), 1.0 / 9.0);
        assert_eq!(growth_constant_fb(2.0, 1.0, 0.5, 1.0, 1.0, None).unwrap(), 0.5);
        assert_eq!(growth_constant_ns(2.0, 1.0, 1.0, None).unwrap(), 0.25);
        assert_eq!(growth_constant_ns(1.0, 1.0, 1.0, Some(2.0)).unwrap(), 0.5);
        assert_eq!(contraction_c1(1.0, 2.0, 2, 1.0).unwrap(), 0.75);
        assert!(growth_constant_me(0.5, 1.0, 1.0, None).is_err());
        assert!(growth_constant_me(1.5, 1.0, 1.0, None).is_err());
        assert!(growth_constant_fb(2.0, 1.0, 2.0, 1.0, 1.0, None).is_err());
    }

    proptest! {
        #[test]
        fn doubling_multiplicities(k0 in 1u64..50, big_j in 1u32..9) {
            let len = (1usize << big_j) - 1;
            let s = doubling_schedule(k0, len);
            for j in 0..big_j {
                let count = s.iter().filter(|&&k| k == k0 << j).count();
                prop_assert_eq!(count, 1usize << (big_j - 1 - j));
            }
        }

        #[test]
        fn c1_is_a_contraction(kb in 1e-6..1e3f64, q in 1.0..=2.0f64, n in 1usize..1000, d0 in 1e-3..1e3f64) {
            let c = contraction_c1(kb, q, n, d0).unwrap();
            prop_assert!(c > 0.0 && c < 1.0);
            prop_assert_eq!(c.to_bits(), contraction_c1(kb, q, n, d0).unwrap().to_bits());
        }

        #[test]
        fn restart_period_meets_its_bound(n in 1usize..200, kb in 1e-3..10.0f64, a in 0.01..1.0f64) {
            let k = restart_period(n, 2.0, kb, a, 0.0).unwrap() as f64;
            // the guaranteed contraction 4N²/(k² κ̄) is at most alpha
            prop_assert!(4.0 * (n * n) as f64 / (k * k * kb) <= a * (1.0 + 1e-12));
        }
    }
}
