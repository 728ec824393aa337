//! One-dimensional total-variation prox by Condat's direct algorithm.

/// `argmin_u ½‖u − y‖² + t Σ|u_i − u_{i+1}|`
pub fn prox_tv_1d(t: f64, y: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut out = y.to_vec();
    if n < 2 || t <= 0.0 {
        return out;
    }
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = t;
    let mut umax = -t;
    let mut vmin = y[0] - t;
    let mut vmax = y[0] + t;
    let twot = 2.0 * t;
    loop {
        while k == n - 1 {
            if umin < 0.0 {
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = y[k0];
                umin = t;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = y[k0];
                umax = -t;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                while k0 <= k {
                    out[k0] = vmin;
                    k0 += 1;
                }
                return out;
            }
        }
        umin += y[k + 1] - vmin;
        if umin < -t {
            loop {
                out[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = y[k0];
            vmax = vmin + twot;
            umin = t;
            umax = -t;
            continue;
        }
        umax += y[k + 1] - vmax;
        if umax > t {
            loop {
                out[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmax = y[k0];
            vmin = vmax - twot;
            umin = t;
            umax = -t;
        } else {
            k += 1;
            if umin >= t {
                kminus = k;
                vmin += (umin - t) / (kminus - k0 + 1) as f64;
                umin = t;
            }
            if umax <= -t {
                kplus = k;
                vmax += (umax + t) / (kplus - k0 + 1) as f64;
                umax = -t;
            }
        }
    }
}

pub fn total_variation(u: &[f64]) -> f64 {
    u.windows(2).map(|w| (w[0] - w[1]).abs()).sum()
}


#[cfg(test)]
mod tests {
    use super::oracle::tv_by_sign_patterns;
    use super::*;
    use crate::rng::Pcg64;

    fn objective(t: f64, y: &[f64], u: &[f64]) -> f64 {
        0.5 * u.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + t * total_variation(u)
    }

    #[test]
    fn examples() {
        let u = prox_tv_1d(0.5, &[1.0, -1.0]);
        assert!((u[0] - 0.5).abs() < 1e-15 && (u[1] + 0.5).abs() < 1e-15);
        assert_eq!(prox_tv_1d(0.0, &[1.0, 3.0, -2.0]), vec![1.0, 3.0, -2.0]);
        assert_eq!(prox_tv_1d(2.0, &[1.5; 5]), vec![1.5; 5]);
        assert_eq!(tv_by_sign_patterns(0.5, &[1.0, -1.0]), vec![0.5, -0.5]);
    }

    #[test]
    fn matches_oracle_on_random_short_signals() {
        let mut rng = Pcg64::seed_from(8);
        for _ in 0..2000 {
            let n = 1 + rng.below(6);
            let y: Vec<f64> = (0..n).map(|_| 2.0 * rng.normal()).collect();
            let t = rng.uniform(0.0, 3.0);
            let a = prox_tv_1d(t, &y);
            let b = tv_by_sign_patterns(t, &y);
            for (p, q) in a.iter().zip(&b) {
                assert!((p - q).abs() <= 1e-12, "y={y:?} t={t} {a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn long_signals_are_optimal_against_perturbations() {
        let mut rng = Pcg64::seed_from(9);
        for _ in 0..50 {
            let n = 50 + rng.below(200);
            let y: Vec<f64> = (0..n).map(|i| (i / 17) as f64 + 0.3 * rng.normal()).collect();
            let t = rng.uniform(0.05, 2.0);
            let u = prox_tv_1d(t, &y);
            let base = objective(t, &y, &u);
            for _ in 0..50 {
                let mut v = u.clone();
                let j = rng.below(n);
                let len = 1 + rng.below(n - j);
                let eps = 1e-4 * rng.normal();
                for w in &mut v[j..j + len] {
                    *w += eps;
                }
                assert!(objective(t, &y, &v) >= base - 1e-12);
            }
        }
    }
}
