//! Closed-form and one-dimensional-root proximal operators.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm2};
use crate::rng::Pcg64;

/// Block soft-threshold `(1 − t/‖x‖)₊ x`.
pub fn prox_euclidean_norm(t: f64, x: &[f64]) -> Vec<f64> {
    let nx = norm2(x);
    if nx <= t {
        return vec![0.0; x.len()];
    }
    let s = 1.0 - t / nx;
    x.iter().map(|v| s * v).collect()
}

/// Componentwise soft-threshold.
pub fn soft_threshold(t: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.signum() * (v.abs() - t).max(0.0)).collect()
}

/// Check that `groups` are pairwise disjoint and cover `0..n`.
pub fn validate_groups(groups: &[Vec<usize>], n: Option<usize>) -> Result<()> {
    let total: usize = groups.iter().map(|g| g.len()).sum();
    let max = groups.iter().flatten().copied().max().map_or(0, |m| m + 1);
    let n = n.unwrap_or(max.max(total));
    let mut seen = vec![false; n.max(max)];
    for &j in groups.iter().flatten() {
        if seen[j] {
            return Err(Error::arg(format!("index {j} appears in more than one group")));
        }
        seen[j] = true;
    }
    if seen.len() != n || seen.iter().any(|s| !s) {
        return Err(Error::arg(format!("groups do not partition 0..{n}")));
    }
    Ok(())
}

/// Group soft-threshold; `groups` must partition `0..x.len()`.
pub fn prox_group_norm(t: f64, x: &[f64], groups: &[Vec<usize>]) -> Result<Vec<f64>> {
    validate_groups(groups, Some(x.len()))?;
    let mut out = x.to_vec();
    for g in groups {
        let nrm = g.iter().map(|&j| x[j] * x[j]).sum::<f64>().sqrt();
        let s = if nrm <= t { 0.0 } else { 1.0 - t / nrm };
        for &j in g {
            out[j] = s * x[j];
        }
    }
    Ok(out)
}

pub fn project_l2_ball(r: f64, x: &[f64]) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::arg("ball radius must be positive"));
    }
    let nx = norm2(x);
    if nx <= r {
        return Ok(x.to_vec());
    }
    Ok(x.iter().map(|v| r * v / nx).collect())
}

/// Threshold `θ ≥ 0` with `Σ max(v_i − θ, 0) = r` for nonnegative `v`
/// whose sum exceeds `r`; expected linear time randomized pivoting.
fn l1_threshold(v: &[f64], r: f64) -> f64 {
    let mut rng = Pcg64::seed_from(0x5eed_0f_b411);
    let mut cand: Vec<f64> = v.to_vec();
    let mut s = 0.0;
    let mut rho = 0usize;
    let mut greater = Vec::with_capacity(v.len());
    let mut lesser = Vec::with_capacity(v.len());
    while !cand.is_empty() {
        let pivot = cand[rng.below(cand.len())];
        greater.clear();
        lesser.clear();
        for &c in &cand {
            if c >= pivot {
                greater.push(c);
            } else {
                lesser.push(c);
            }
        }
        let ds: f64 = greater.iter().sum();
        let drho = greater.len();
        if (s + ds) - (rho + drho) as f64 * pivot < r {
            s += ds;
            rho += drho;
            std::mem::swap(&mut cand, &mut lesser);
        } else {
            // drop one copy of the pivot and keep the rest of the upper part
            let k = greater.iter().position(|&c| c == pivot).unwrap();
            greater.swap_remove(k);
            std::mem::swap(&mut cand, &mut greater);
        }
    }
    ((s - r) / rho as f64).max(0.0)
}

/// Euclidean projection onto `{u : ‖u − c‖₁ ≤ r}`; an empty `c` means the origin.
pub fn project_l1_ball(r: f64, c: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::arg("ball radius must be positive"));
    }
    let shifted: Vec<f64> = if c.is_empty() {
        x.to_vec()
    } else {
        check_len(x.len(), c.len())?;
        x.iter().zip(c).map(|(a, b)| a - b).collect()
    };
    let abs: Vec<f64> = shifted.iter().map(|v| v.abs()).collect();
    if abs.iter().sum::<f64>() <= r {
        return Ok(x.to_vec());
    }
    let theta = l1_threshold(&abs, r);
    Ok(shifted
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let u = v.signum() * (v.abs() - theta).max(0.0);
            if c.is_empty() {
                u
            } else {
                u + c[j]
            }
        })
        .collect())
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(x: &[f64]) -> Vec<f64> {
    if x.is_empty() {
        return Vec::new();
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}

fn clip(v: f64, lo: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

/// Projection onto `{u : aᵀu = b, l ≤ u ≤ u_max}`.
pub fn project_hyperplane_box(a: &[f64], b: f64, l: &[f64], u: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    check_len(n, a.len())?;
    check_len(n, l.len())?;
    check_len(n, u.len())?;
    if l.iter().zip(u).any(|(lo, hi)| lo > hi) {
        return Err(Error::Infeasible("lower bound exceeds upper bound".into()));
    }
    let g = |mu: f64| -> f64 {
        (0..n).map(|i| a[i] * clip(x[i] - mu * a[i], l[i], u[i])).sum()
    };
    let mut gmax = 0.0;
    let mut gmin = 0.0;
    for i in 0..n {
        if a[i] > 0.0 {
            gmax += a[i] * u[i];
            gmin += a[i] * l[i];
        } else if a[i] < 0.0 {
            gmax += a[i] * l[i];
            gmin += a[i] * u[i];
        }
    }
    let slack = 1e-12 * (1.0 + b.abs());
    if b > gmax + slack || b < gmin - slack || (gmax.is_nan() || gmin.is_nan()) {
        return Err(Error::Infeasible(format!(
            "no point of the box meets the hyperplane (attainable range [{gmin}, {gmax}], b = {b})"
        )));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Ok((0..n).map(|i| clip(x[i], l[i], u[i])).collect());
    }

    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut guard = 0;
    while g(lo) < b && guard < 2000 {
        lo *= 2.0;
        guard += 1;
    }
    while g(hi) > b && guard < 4000 {
        hi *= 2.0;
        guard += 1;
    }
    for _ in 0..400 {
        if hi - lo <= 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > b {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut mu = 0.5 * (lo + hi);

    // The map is piecewise linear: solve exactly on the active set at `mu`.
    let mut free_sq = 0.0;
    let mut rhs = -b;
    for i in 0..n {
        let v = x[i] - mu * a[i];
        if a[i] != 0.0 && v > l[i] && v < u[i] {
            free_sq += a[i] * a[i];
            rhs += a[i] * x[i];
        } else {
            rhs += a[i] * clip(v, l[i], u[i]);
        }
    }
    if free_sq > 0.0 {
        let exact = rhs / free_sq;
        if (exact - mu).abs() <= 1e-9 * (1.0 + mu.abs()) && (g(exact) - b).abs() <= (g(mu) - b).abs() {
            mu = exact;
        }
    }
    Ok((0..n).map(|i| clip(x[i] - mu * a[i], l[i], u[i])).collect())
}

/// `{u : Au = b}` with a cached Cholesky factor of `AAᵀ`.
#[derive(Clone, Debug)]
pub struct AffineSet {
    a: DMatrix<f64>,
    b: Vec<f64>,
    chol: Cholesky<f64, Dyn>,
}

impl AffineSet {
    pub fn new(a: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        check_len(a.nrows(), b.len())?;
        if a.nrows() > a.ncols() {
            return Err(Error::Factorization("more constraints than variables".into()));
        }
        let gram = &a * a.transpose();
        let scale = gram.diagonal().amax();
        let chol = Cholesky::new(gram)
            .ok_or_else(|| Error::Factorization("AAᵀ is not positive definite".into()))?;
        let l = chol.l_dirty();
        if scale == 0.0 || (0..l.nrows()).any(|i| l[(i, i)] * l[(i, i)] <= 1e-12 * scale) {
            return Err(Error::Factorization("constraint matrix is rank deficient".into()));
        }
        Ok(AffineSet { a, b, chol })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn rhs(&self) -> &[f64] {
        &self.b
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let ax = &self.a * DVector::from_column_slice(x);
        ax.iter().zip(&self.b).map(|(p, q)| p - q).collect()
    }

    /// `x − Aᵀ(AAᵀ)⁻¹(Ax − b)`
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.a.ncols(), x.len())?;
        let r = DVector::from_vec(self.residual(x));
        let w = self.chol.solve(&r);
        let corr = self.a.tr_mul(&w);
        Ok(x.iter().zip(corr.iter()).map(|(a, c)| a - c).collect())
    }
}

/// Root in `(0, 1]` of `t + c t^{p} = 1` for `c ≥ 0`, `p ≥ 1`.
fn power_root(c: f64, p: f64) -> f64 {
    if c == 0.0 {
        return 1.0;
    }
    let f = |t: f64| t + c * t.powf(p) - 1.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    // Newton from the right is monotone for this convex increasing map;
    // the bracket only guards against round-off.
    let mut t = 1.0 / (1.0 + c).min(1.0 + c.powf(1.0 / p));
    t = t.clamp(f64::MIN_POSITIVE, 1.0);
    for _ in 0..200 {
        let ft = f(t);
        if ft > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        if ft == 0.0 {
            break;
        }
        let d = 1.0 + c * p * t.powf(p - 1.0);
        let mut next = t - ft / d;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - t).abs() <= 1e-15 * t.max(1e-300) {
            t = next;
            break;
        }
        t = next;
    }
    t
}

/// Prox of `γ·w·‖x‖^{r+2}`: returns `t·x` with `t + γw(r+2)‖x‖^r t^{r+1} = 1`.
pub fn prox_power_norm_weighted(gamma: f64, weight: f64, r: f64, x: &[f64]) -> Result<Vec<f64>> {
    if !(r >= 0.0) {
        return Err(Error::arg("power must be nonnegative"));
    }
    let nx = norm2(x);
    if nx == 0.0 {
        return Ok(vec![0.0; x.len()]);
    }
    let c = gamma * weight * (r + 2.0) * nx.powf(r);
    let t = power_root(c, r + 1.0);
    Ok(x.iter().map(|v| t * v).collect())
}

pub fn prox_power_norm(gamma: f64, r: f64, x: &[f64]) -> Result<Vec<f64>> {
    prox_power_norm_weighted(gamma, 1.0, r, x)
}

/// Residual of `0 ∈ ∂(λ‖·‖)(u) + (u − x)/γ`, measured as the distance of
/// `(x − u)/γ` to the subdifferential.
pub fn euclidean_norm_optimality(lambda: f64, gamma: f64, x: &[f64], u: &[f64]) -> f64 {
    let g: Vec<f64> = x.iter().zip(u).map(|(a, b)| (a - b) / gamma).collect();
    let nu = norm2(u);
    if nu == 0.0 {
        (norm2(&g) - lambda).max(0.0)
    } else {
        let target: Vec<f64> = u.iter().map(|v| lambda * v / nu).collect();
        norm2(&g.iter().zip(&target).map(|(a, b)| a - b).collect::<Vec<_>>())
    }
}

#[cfg(test)]
fn normal_cone_residual_box(x: &[f64], u: &[f64], l: &[f64], hi: &[f64], a: &[f64]) -> f64 {
    // (x − u) must equal μa + ν with ν in the box normal cone at u.
    let num: f64 = (0..x.len())
        .filter(|&i| u[i] > l[i] && u[i] < hi[i])
        .map(|i| a[i] * (x[i] - u[i]))
        .sum();
    let den: f64 = (0..x.len()).filter(|&i| u[i] > l[i] && u[i] < hi[i]).map(|i| a[i] * a[i]).sum();
    let mu = if den > 0.0 { num / den } else { 0.0 };
    (0..x.len())
        .map(|i| {
            let w = x[i] - u[i] - mu * a[i];
            if u[i] <= l[i] {
                w.max(0.0)
            } else if u[i] >= hi[i] {
                (-w).max(0.0)
            } else {
                w.abs()
            }
        })
        .fold(0.0, f64::max)
}

pub(crate) fn simplex_feasible(u: &[f64], tol: f64) -> bool {
    u.iter().all(|&v| v >= -tol) && (u.iter().sum::<f64>() - 1.0).abs() <= tol
}

pub(crate) fn inner(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn sort_threshold(v: &[f64], r: f64) -> f64 {
        let mut s = v.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        let mut acc = 0.0;
        let mut theta = 0.0;
        for (k, &x) in s.iter().enumerate() {
            acc += x;
            let t = (acc - r) / (k + 1) as f64;
            if x > t {
                theta = t;
            }
        }
        theta
    }

    #[test]
    fn euclidean_norm_examples() {
        assert!(close(&prox_euclidean_norm(1.0, &[3.0, 4.0]), &[2.4, 3.2], 1e-15));
        assert_eq!(prox_euclidean_norm(1.0, &[0.3, 0.4]), vec![0.0, 0.0]);
        assert_eq!(prox_euclidean_norm(0.0, &[0.3, 0.4]), vec![0.3, 0.4]);
        let u = prox_euclidean_norm(1.0, &[3.0, 4.0]);
        assert!(euclidean_norm_optimality(1.0, 1.0, &[3.0, 4.0], &u) < 1e-12);
    }

    #[test]
    fn group_examples() {
        let x = [3.0, 4.0, 0.1, 0.0];
        let g = vec![vec![0, 1], vec![2, 3]];
        assert!(close(&prox_group_norm(1.0, &x, &g).unwrap(), &[2.4, 3.2, 0.0, 0.0], 1e-15));
        let whole = vec![vec![0, 1, 2, 3]];
        assert_eq!(prox_group_norm(0.7, &x, &whole).unwrap(), prox_euclidean_norm(0.7, &x));
        assert_eq!(prox_group_norm(0.0, &x, &g).unwrap(), x.to_vec());
        assert!(prox_group_norm(1.0, &x, &[vec![0, 1], vec![1, 2, 3]]).is_err());
        assert!(prox_group_norm(1.0, &x, &[vec![0, 1]]).is_err());
    }

    #[test]
    fn ball_examples() {
        assert!(close(&project_l2_ball(1.0, &[3.0, 4.0]).unwrap(), &[0.6, 0.8], 1e-15));
        assert_eq!(project_l2_ball(10.0, &[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(project_l2_ball(1.0, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(project_l2_ball(0.0, &[1.0]).is_err());

        assert!(close(&project_l1_ball(0.5, &[], &[0.5, 0.5]).unwrap(), &[0.25, 0.25], 1e-15));
        assert!(close(&project_l1_ball(0.5, &[], &[2.0, 0.0]).unwrap(), &[0.5, 0.0], 1e-15));
        assert_eq!(project_l1_ball(5.0, &[], &[1.0, -2.0]).unwrap(), vec![1.0, -2.0]);
        let shifted = project_l1_ball(0.5, &[1.0, 1.0], &[1.5, 1.5]).unwrap();
        assert!(close(&shifted, &[1.25, 1.25], 1e-15));
    }

    #[test]
    fn pivot_threshold_matches_sorting() {
        let mut rng = Pcg64::seed_from(99);
        for trial in 0..200 {
            let n = 1 + trial % 40;
            let v: Vec<f64> = (0..n)
                .map(|_| if rng.next_f64() < 0.2 { 1.0 } else { rng.next_f64() * 3.0 })
                .collect();
            let total: f64 = v.iter().sum();
            let r = total * rng.uniform(0.05, 0.95);
            let a = l1_threshold(&v, r);
            let b = sort_threshold(&v, r);
            assert!((a - b).abs() <= 1e-12 * (1.0 + b), "{a} vs {b}");
        }
    }

    #[test]
    fn simplex_examples() {
        assert_eq!(project_simplex(&[1.0, 0.0]), vec![1.0, 0.0]);
        assert!(close(&project_simplex(&[0.6, 0.6]), &[0.5, 0.5], 1e-15));
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let mut rng = Pcg64::seed_from(1);
        for _ in 0..100 {
            let x = rng.normal_vec(7);
            assert!(simplex_feasible(&project_simplex(&x), 1e-12));
        }
    }

    #[test]
    fn hyperplane_box_examples() {
        let (a, l, u) = ([1.0, 1.0], [0.0, 0.0], [1.0, 1.0]);
        assert_eq!(project_hyperplane_box(&a, 1.0, &l, &u, &[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert!(close(&project_hyperplane_box(&a, 1.0, &l, &u, &[1.0, 1.0]).unwrap(), &[0.5, 0.5], 1e-12));
        assert!(close(&project_hyperplane_box(&a, 1.0, &l, &u, &[2.0, -1.0]).unwrap(), &[1.0, 0.0], 1e-12));
        assert!(matches!(
            project_hyperplane_box(&a, 3.0, &l, &u, &[0.0, 0.0]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn hyperplane_box_kkt_on_random_instances() {
        let mut rng = Pcg64::seed_from(17);
        for _ in 0..200 {
            let n = 2 + rng.below(6);
            let a: Vec<f64> = (0..n).map(|_| rng.normal()).collect();
            let l: Vec<f64> = (0..n).map(|_| -rng.uniform(0.1, 2.0)).collect();
            let u: Vec<f64> = (0..n).map(|_| rng.uniform(0.1, 2.0)).collect();
            let b = 0.5 * rng.normal();
            let x = rng.normal_vec(n);
            let Ok(p) = project_hyperplane_box(&a, b, &l, &u, &x) else { continue };
            assert!((inner(&a, &p) - b).abs() <= 1e-10);
            assert!(p.iter().zip(&l).all(|(v, lo)| v >= lo) && p.iter().zip(&u).all(|(v, hi)| v <= hi));
            assert!(normal_cone_residual_box(&x, &p, &l, &u, &a) <= 1e-8);
        }
    }

    #[test]
    fn affine_examples() {
        let set = AffineSet::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), vec![1.0]).unwrap();
        assert!(close(&set.project(&[1.0, 1.0]).unwrap(), &[0.5, 0.5], 1e-15));
        assert!(close(&set.project(&[0.25, 0.75]).unwrap(), &[0.25, 0.75], 1e-15));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 2.0, 2.0]);
        assert!(matches!(AffineSet::new(singular, vec![1.0, 2.0]), Err(Error::Factorization(_))));
    }

    #[test]
    fn affine_random_residual_and_orthogonality() {
        let mut rng = Pcg64::seed_from(5);
        let a = DMatrix::from_fn(2, 5, |_, _| rng.normal());
        let b = rng.normal_vec(2);
        let set = AffineSet::new(a.clone(), b).unwrap();
        let x = rng.normal_vec(5);
        let p = set.project(&x).unwrap();
        assert!(norm2(&set.residual(&p)) <= 1e-10);
        // x − p lies in range(Aᵀ), hence is orthogonal to null(A)
        let diff: Vec<f64> = x.iter().zip(&p).map(|(s, t)| s - t).collect();
        let full = nalgebra::DMatrix::from_fn(5, 5, |i, j| if i < 2 { a[(i, j)] } else { rng.normal() });
        let q = full.transpose().qr().q();
        for k in 2..5 {
            let z: Vec<f64> = q.column(k).iter().copied().collect();
            let az = &a * DVector::from_column_slice(&z);
            if az.norm() < 1e-10 {
                assert!(inner(&diff, &z).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn power_examples() {
        assert!(close(&prox_power_norm(0.5, 0.0, &[2.0, 0.0]).unwrap(), &[1.0, 0.0], 1e-15));
        assert_eq!(prox_power_norm(0.5, 3.0, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        let t = prox_power_norm(0.25, 2.0, &[1.0]).unwrap()[0];
        assert!((t * t * t + t - 1.0).abs() <= 1e-12);
        assert!((t - 0.6823278038280193).abs() < 1e-12);
        for g in [0.1, 1.0, 7.0] {
            let x = [1.5, -0.5];
            let p = prox_power_norm(g, 0.0, &x).unwrap();
            assert!(close(&p, &[1.5 / (1.0 + 2.0 * g), -0.5 / (1.0 + 2.0 * g)], 1e-14));
        }
    }
}
