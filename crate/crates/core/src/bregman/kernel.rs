use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, Dyn};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm2, norm2_sq, Matrix};

/// Result of a block subproblem solve.
#[derive(Clone, Debug, PartialEq)]
pub struct Subproblem {
    pub d: Vec<f64>,
    /// Relative residual of the scalar root equation, when one was solved.
    pub root_residual: Option<f64>,
}

/// Strictly convex (along blocks) reference function `φ`.
///
/// Kernels keep a small cache of products of `x` (for instance `‖x‖²` or
/// `Ax`) so block operations avoid touching all of `x`.
pub trait Kernel: Send + Sync {
    fn name(&self) -> &'static str;

    fn value(&self, x: &[f64]) -> f64;

    fn grad(&self, x: &[f64]) -> Vec<f64>;

    fn cache(&self, x: &[f64]) -> Vec<f64>;

    /// Updates the cache for `x[r] += d`; `x` is the point before the step.
    fn cache_step(&self, cache: &mut [f64], x: &[f64], r: Range<usize>, d: &[f64]);

    fn block_grad(&self, x: &[f64], cache: &[f64], r: Range<usize>) -> Vec<f64>;

    /// `φ(x + U_i d) − φ(x) − ⟨∇_i φ(x), d⟩`.
    fn coord_bregman(&self, x: &[f64], r: Range<usize>, d: &[f64]) -> f64;

    /// Minimizer of `⟨g, d⟩ + L·D_φ(x + U_i d, x)` over the block.
    fn solve_subproblem(&self, x: &[f64], cache: &[f64], r: Range<usize>, g: &[f64], l: f64) -> Result<Subproblem>;
}

/// `D_φ(y, x) = φ(y) − φ(x) − ⟨∇φ(x), y − x⟩`.
pub fn bregman_distance<K: Kernel + ?Sized>(k: &K, y: &[f64], x: &[f64]) -> f64 {
    let g = k.grad(x);
    let diff: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    k.value(y) - k.value(x) - dot(&g, &diff)
}

/// `‖x‖ᵖ/p + ½‖x‖²` with `p > 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerKernel {
    p: f64,
}

impl PowerKernel {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 2.0 && p.is_finite()) {
            return Err(Error::arg(format!("power kernel needs p > 2, got {p}")));
        }
        Ok(PowerKernel { p })
    }

    pub fn quartic() -> Self {
        PowerKernel { p: 4.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn scale(&self, sq: f64) -> f64 {
        sq.powf((self.p - 2.0) / 2.0) + 1.0
    }
}

/// Positive root in `α` of `aα⁶ + (2a − b)α⁴ + (a − 2b)α² − c`, returned
/// with its residual relative to the sum of absolute term values.
///
/// In `u = α²` the polynomial is `(1 + u)²(au − b) − (c − b)`, increasing
/// for `u ≥ b/a`, so the root lies in `[b/a, c/a]` when `c ≥ b`.
pub fn sextic_root(a: f64, b: f64, c: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && b >= 0.0 && c >= 0.0) || !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Err(Error::arg(format!("sextic needs a > 0 and b, c ≥ 0; got a = {a}, b = {b}, c = {c}")));
    }
    let poly = |u: f64| (1.0 + u) * (1.0 + u) * (a * u - b) - (c - b);
    let deriv = |u: f64| (1.0 + u) * (2.0 * (a * u - b) + a * (1.0 + u));
    let (lo, hi) = if c >= b { (b / a, c / a) } else { (0.0, b / a) };
    let u = safeguarded_newton(poly, deriv, lo, hi);
    let alpha = u.sqrt();
    let terms = [a * u * u * u, (2.0 * a - b) * u * u, (a - 2.0 * b) * u, c];
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    let res = (terms[0] + terms[1] + terms[2] - terms[3]).abs();
    let rel = if scale > 0.0 { res / scale } else { 0.0 };
    Ok((alpha, rel))
}

/// Root of an increasing function on `[lo, hi]` with `f(lo) ≤ 0 ≤ f(hi)`.
fn safeguarded_newton(f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    if f(lo) >= 0.0 {
        return lo;
    }
    if f(hi) <= 0.0 {
        return hi;
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = f(u);
        if v == 0.0 {
            return u;
        }
        if v < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let slope = df(u);
        let mut next = u - v / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - u).abs() <= 4.0 * f64::EPSILON * u.abs().max(f64::MIN_POSITIVE) || hi - lo <= 4.0 * f64::EPSILON * hi {
            return next;
        }
        u = next;
    }
    u
}

impl Kernel for PowerKernel {
    fn name(&self) -> &'static str {
        "power"
    }

    fn value(&self, x: &[f64]) -> f64 {
        let sq = norm2_sq(x);
        sq.powf(self.p / 2.0) / self.p + 0.5 * sq
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let s = self.scale(norm2_sq(x));
        x.iter().map(|v| s * v).collect()
    }

    fn cache(&self, x: &[f64]) -> Vec<f64> {
        vec![norm2_sq(x)]
    }

    fn cache_step(&self, cache: &mut [f64], x: &[f64], r: Range<usize>, d: &[f64]) {
        let xi = &x[r];
        cache[0] += 2.0 * dot(xi, d) + norm2_sq(d);
        cache[0] = cache[0].max(0.0);
    }

    fn block_grad(&self, x: &[f64], cache: &[f64], r: Range<usize>) -> Vec<f64> {
        let s = self.scale(cache[0]);
        x[r].iter().map(|v| s * v).collect()
    }

    fn coord_bregman(&self, x: &[f64], r: Range<usize>, d: &[f64]) -> f64 {
        let sq = norm2_sq(x);
        let xi = &x[r];
        let delta = 2.0 * dot(xi, d) + norm2_sq(d);
        let sq_new = (sq + delta).max(0.0);
        let m = self.p / 2.0;
        let power_diff = if self.p == 4.0 {
            0.5 * delta * (sq_new + sq) / 2.0
        } else {
            (sq_new.powf(m) - sq.powf(m)) / self.p
        };
        // ½‖x + d‖² − ½‖x‖² − ⟨x, d⟩ = ½‖d‖²
        power_diff - sq.powf(m - 1.0) * dot(xi, d) + 0.5 * norm2_sq(d)
    }

    fn solve_subproblem(&self, x: &[f64], cache: &[f64], r: Range<usize>, g: &[f64], l: f64) -> Result<Subproblem> {
        if !(l > 0.0) {
            return Err(Error::arg(format!("relative constant must be positive, got {l}")));
        }
        let sq = cache[0];
        let xi = &x[r];
        let s_out = (sq - norm2_sq(xi)).max(0.0);
        let phi_g = self.scale(sq);
        // stationarity: ∇_iφ(x + U_i d) = −G/L with G = g − L∇_iφ(x)
        let big_g: Vec<f64> = g.iter().zip(xi).map(|(gi, xv)| gi - l * phi_g * xv).collect();
        let gsq = norm2_sq(&big_g);
        let (u, root_residual) = if self.p == 4.0 {
            let (alpha, res) = sextic_root(l * l, l * l * s_out, gsq + l * l * s_out)?;
            (alpha * alpha, Some(res))
        } else {
            let m = (self.p - 2.0) / 2.0;
            let t = gsq / (l * l);
            let f = |u: f64| {
                let w = 1.0 + u.powf(m);
                w * w * (u - s_out) - t
            };
            let df = |u: f64| {
                let w = 1.0 + u.powf(m);
                let dw = if u > 0.0 { m * u.powf(m - 1.0) } else { 0.0 };
                2.0 * w * dw * (u - s_out) + w * w
            };
            let u = safeguarded_newton(f, df, s_out, s_out + t);
            let scale = (1.0 + u.powf(m)).powi(2) * u.max(s_out) + t;
            (u, Some(if scale > 0.0 { f(u).abs() / scale } else { 0.0 }))
        };
        let w = self.scale(u);
        let d = big_g.iter().zip(xi).map(|(gv, xv)| -gv / (l * w) - xv).collect();
        Ok(Subproblem { d, root_residual })
    }
}

/// `½⟨Ax, x⟩` with symmetric positive definite `A`.
#[derive(Clone, Debug)]
pub struct QuadKernel {
    a: Matrix,
    dense: DMatrix<f64>,
}

impl QuadKernel {
    pub fn new(a: Matrix) -> Result<Self> {
        if a.nrows() != a.ncols() || !a.is_symmetric(1e-12) {
            return Err(Error::arg("quadratic kernel needs a symmetric matrix"));
        }
        let dense = a.to_dense();
        if let Some(i) = (0..a.nrows()).find(|&i| !(dense[(i, i)] > 0.0)) {
            return Err(Error::arg(format!("quadratic kernel needs A_ii > 0, row {i} has {}", dense[(i, i)])));
        }
        Ok(QuadKernel { a, dense })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    fn block(&self, r: &Range<usize>) -> DMatrix<f64> {
        self.dense.view((r.start, r.start), (r.len(), r.len())).into_owned()
    }
}

impl Kernel for QuadKernel {
    fn name(&self) -> &'static str {
        "quad"
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * dot(x, &self.a.mul_vec(x))
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.a.mul_vec(x)
    }

    fn cache(&self, x: &[f64]) -> Vec<f64> {
        self.a.mul_vec(x)
    }

    fn cache_step(&self, cache: &mut [f64], _x: &[f64], r: Range<usize>, d: &[f64]) {
        for (j, dj) in r.zip(d) {
            self.a.col_axpy(j, *dj, cache);
        }
    }

    fn block_grad(&self, _x: &[f64], cache: &[f64], r: Range<usize>) -> Vec<f64> {
        cache[r].to_vec()
    }

    fn coord_bregman(&self, _x: &[f64], r: Range<usize>, d: &[f64]) -> f64 {
        let blk = self.block(&r);
        let v = nalgebra::DVector::from_column_slice(d);
        0.5 * v.dot(&(&blk * &v))
    }

    fn solve_subproblem(&self, _x: &[f64], _cache: &[f64], r: Range<usize>, g: &[f64], l: f64) -> Result<Subproblem> {
        if !(l > 0.0) {
            return Err(Error::arg(format!("relative constant must be positive, got {l}")));
        }
        if r.len() == 1 {
            return Ok(Subproblem { d: vec![-g[0] / (l * self.dense[(r.start, r.start)])], root_residual: None });
        }
        let chol: Cholesky<f64, Dyn> = Cholesky::new(self.block(&r))
            .ok_or_else(|| Error::Factorization(format!("kernel block at {}..{} is not positive definite", r.start, r.end)))?;
        let rhs = nalgebra::DVector::from_iterator(g.len(), g.iter().map(|v| -v / l));
        Ok(Subproblem { d: chol.solve(&rhs).as_slice().to_vec(), root_residual: None })
    }
}

/// Kernel described by `{"kind":"power","p":4}` or `{"kind":"quad","A":...}`.
pub fn kernel_from_json(v: &Value) -> Result<Box<dyn Kernel>> {
    let kind = v.get("kind").and_then(Value::as_str).ok_or_else(|| Error::config("kernel needs a \"kind\""))?;
    match kind {
        "power" => {
            let p = v.get("p").and_then(Value::as_f64).unwrap_or(4.0);
            Ok(Box::new(PowerKernel::new(p)?))
        }
        "quad" => {
            let a: Matrix = serde_json::from_value(v.get("A").cloned().ok_or_else(|| Error::config("quad kernel needs \"A\""))?)?;
            Ok(Box::new(QuadKernel::new(a)?))
        }
        other => Err(Error::config(format!("unknown kernel {other:?}; valid choices are power, quad"))),
    }
}

/// Norm of `g + L(∇_iφ(x⁺) − ∇_iφ(x))`, the block stationarity residual.
pub fn stationarity_residual(g: &[f64], l: f64, grad_new: &[f64], grad_old: &[f64]) -> f64 {
    let r: Vec<f64> = g.iter().zip(grad_new.iter().zip(grad_old)).map(|(gv, (a, b))| gv + l * (a - b)).collect();
    norm2(&r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Golden-section minimization of a unimodal scalar function.
    fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..300 {
            let a = hi - r * (hi - lo);
            let b = lo + r * (hi - lo);
            if f(a) < f(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn distance_examples() {
        let k = PowerKernel::quartic();
        assert_eq!(bregman_distance(&k, &[1.0], &[0.0]), 0.75);
        assert_eq!(bregman_distance(&k, &[0.3, -2.0], &[0.3, -2.0]), 0.0);
        let q = QuadKernel::new(Matrix::identity(2)).unwrap();
        let d = bregman_distance(&q, &[1.0, 3.0], &[0.0, 1.0]);
        assert!((d - 0.5 * 5.0).abs() < 1e-15);
    }

    #[test]
    fn sextic_examples() {
        let (alpha, res) = sextic_root(1.0, 0.0, 4.0).unwrap();
        assert!((alpha - 1.0).abs() <= 1e-12);
        assert!(res <= 1e-12);
        assert_eq!(sextic_root(2.0, 0.0, 0.0).unwrap().0, 0.0);
        assert!(sextic_root(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn quadratic_subproblem_examples() {
        let k = QuadKernel::new(Matrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap()).unwrap();
        let x = [0.0, 0.0];
        let c = k.cache(&x);
        assert_eq!(k.solve_subproblem(&x, &c, 0..1, &[2.0], 1.0).unwrap().d, vec![-0.5]);
        assert_eq!(k.solve_subproblem(&x, &c, 1..2, &[4.0], 2.0).unwrap().d, vec![-2.0]);
        assert_eq!(k.solve_subproblem(&x, &c, 1..2, &[0.0], 2.0).unwrap().d, vec![0.0]);
    }

    #[test]
    fn power_subproblem_matches_direct_minimization() {
        // F = φ = ¼x⁴ + ½x², L = 1, x = 2: the model is minimized at the
        // minimizer of φ itself
        let k = PowerKernel::quartic();
        let x = [2.0];
        let g = k.grad(&x);
        let sol = k.solve_subproblem(&x, &k.cache(&x), 0..1, &g, 1.0).unwrap();
        let model = |d: f64| g[0] * d + k.coord_bregman(&x, 0..1, &[d]);
        let direct = golden(model, -10.0, 10.0);
        assert!((sol.d[0] - direct).abs() < 1e-8);
        assert!((sol.d[0] + 2.0).abs() < 1e-12);
        let zero = k.solve_subproblem(&[0.0, 0.0], &[0.0], 0..1, &[0.0], 3.0).unwrap();
        assert_eq!(zero.d, vec![0.0]);
    }

    #[test]
    fn json_kernels() {
        let k = kernel_from_json(&serde_json::json!({"kind":"power","p":4})).unwrap();
        assert_eq!(k.name(), "power");
        let q = kernel_from_json(&serde_json::json!({"kind":"quad","A":{"format":"dense","rows":1,"cols":1,"data":[[2.0]]}})).unwrap();
        assert_eq!(q.name(), "quad");
        assert!(kernel_from_json(&serde_json::json!({"kind":"entropy"})).is_err());
    }

    proptest! {
        #[test]
        fn sextic_residual_small(a in 1e-3..1e4f64, b in 0.0..1e3f64, extra in 0.0..1e4f64) {
            let c = b + extra;
            let (alpha, res) = sextic_root(a, b, c).unwrap();
            prop_assert!(alpha >= 0.0);
            prop_assert!(res <= 1e-10, "residual {}", res);
            // exactly one sign change on (0, ∞) in u
            let p = |u: f64| (1.0 + u) * (1.0 + u) * (a * u - b) - (c - b);
            let u = alpha * alpha;
            if extra > 0.0 {
                prop_assert!(p(u * 0.999 - 1e-12) < 0.0 && p(u * 1.001 + 1e-12) > 0.0);
            }
        }

        #[test]
        fn power_subproblem_is_stationary(
            x in proptest::collection::vec(-3.0..3.0f64, 4),
            g in proptest::collection::vec(-10.0..10.0f64, 2),
            l in 0.1..50.0f64,
            p in prop_oneof![Just(4.0), 2.5..6.0f64],
        ) {
            let k = PowerKernel::new(p).unwrap();
            let c = k.cache(&x);
            let sol = k.solve_subproblem(&x, &c, 1..3, &g, l).unwrap();
            let mut xn = x.clone();
            xn[1] += sol.d[0];
            xn[2] += sol.d[1];
            let res = stationarity_residual(&g, l, &k.grad(&xn)[1..3], &k.grad(&x)[1..3]);
            let scale = 1.0 + norm2(&g) + l * norm2(&k.grad(&x)[1..3]);
            prop_assert!(res <= 1e-10 * scale, "residual {}", res);
        }

        #[test]
        fn coordinate_distance_matches_definition(
            x in proptest::collection::vec(-3.0..3.0f64, 3),
            d in -2.0..2.0f64,
        ) {
            let k = PowerKernel::quartic();
            let mut y = x.clone();
            y[1] += d;
            let direct = bregman_distance(&k, &y, &x);
            let coord = k.coord_bregman(&x, 1..2, &[d]);
            prop_assert!((direct - coord).abs() <= 1e-10 * (1.0 + direct.abs()));
            prop_assert!(coord >= 0.0);
        }
    }
}
