//! Derivative-free prox oracle for very small dimensions, used to certify the
//! closed-form operators.
//!
//! Finite `ψ` is handled by nested grid refinement with a compass polish.
//! When `ψ` only takes the values `0` and `+∞` the problem is a projection,
//! and grid refinement stalls on curved or slanted boundaries; there the
//! boundary is parametrized by directions from a feasible interior point and
//! the distance to `x` is minimized over directions instead.

use crate::error::{check_len, Error, Result};
use crate::linalg::{dist2, norm2};

/// Numerical `argmin_u ψ(u) + ‖u − x‖²/(2γ)` for `n ≤ 3`.
pub fn brute_force_prox<F: Fn(&[f64]) -> f64>(psi: F, gamma: f64, x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    let basis: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    brute_force_prox_affine(psi, gamma, x, &vec![0.0; n], &basis)
}

/// Same minimization restricted to `origin + span(basis)` (at most three
/// directions), for sets with equality constraints.
pub fn brute_force_prox_affine<F: Fn(&[f64]) -> f64>(
    psi: F,
    gamma: f64,
    x: &[f64],
    origin: &[f64],
    basis: &[Vec<f64>],
) -> Result<Vec<f64>> {
    let n = x.len();
    check_len(n, origin.len())?;
    let k = basis.len();
    if k > 3 {
        return Err(Error::Unsupported("brute-force prox handles at most 3 free directions".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::arg("gamma must be positive"));
    }
    let q = orthonormalize(basis, n)?;
    let lift = |w: &[f64]| -> Vec<f64> {
        let mut u = origin.to_vec();
        for (c, dir) in w.iter().zip(&q) {
            for (ui, di) in u.iter_mut().zip(dir) {
                *ui += c * di;
            }
        }
        u
    };
    let value = |w: &[f64]| -> f64 {
        let p = psi(&lift(w));
        if p.is_nan() {
            f64::INFINITY
        } else {
            p
        }
    };
    let quad = |w: &[f64]| dist2(&lift(w), x).powi(2) / (2.0 * gamma);
    let obj = |w: &[f64]| value(w) + quad(w);
    if k == 0 {
        return Ok(origin.to_vec());
    }

    let rel: Vec<f64> = x.iter().zip(origin).map(|(a, b)| a - b).collect();
    let target: Vec<f64> = q.iter().map(|d| d.iter().zip(&rel).map(|(a, b)| a * b).sum()).collect();
    let mut half = 2.0 * norm2(&rel) + 4.0;

    // first level: locate the domain and classify ψ
    let mut per_side = 8i64;
    let max_side = if k == 3 { 64 } else { 512 };
    let (mut feasible, mut infeasible_seen, mut indicator) = (Vec::new(), false, true);
    loop {
        for w in std::iter::once(target.clone()).chain(std::iter::once(vec![0.0; k])).chain(grid(&target, half, per_side, k)) {
            let v = value(&w);
            if v.is_finite() {
                indicator &= v == 0.0;
                feasible.push(w);
            } else {
                infeasible_seen = true;
            }
        }
        if !feasible.is_empty() || per_side >= max_side {
            break;
        }
        per_side *= 2;
    }
    if feasible.is_empty() {
        return Err(Error::Infeasible("no feasible grid point found".into()));
    }

    if indicator && infeasible_seen {
        if value(&target).is_finite() {
            return Ok(lift(&target));
        }
        let mut c0 = vec![0.0; k];
        for w in &feasible {
            c0.iter_mut().zip(w).for_each(|(a, b)| *a += b / feasible.len() as f64);
        }
        if value(&c0).is_finite() {
            if let Some(w) = boundary_search(&|w: &[f64]| value(w).is_finite(), &quad, &c0, k, half) {
                return Ok(lift(&w));
            }
        }
    }

    let mut center = feasible
        .iter()
        .min_by(|a, b| obj(a).total_cmp(&obj(b)))
        .cloned()
        .expect("nonempty");
    let mut best = obj(&center);
    while half > 1e-10 {
        let h = half / per_side as f64;
        let mut best_w = center.clone();
        for w in grid(&center, half, per_side, k) {
            let v = obj(&w);
            if v < best {
                best = v;
                best_w = w;
            }
        }
        center = best_w;
        half = 3.0 * h;
    }

    // compass polish
    let mut step = half;
    while step > 1e-13 {
        let mut moved = false;
        for d in 0..k {
            for s in [1.0, -1.0] {
                let mut w = center.clone();
                w[d] += s * step;
                let v = obj(&w);
                if v < best {
                    best = v;
                    center = w;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok(lift(&center))
}

/// Points `center + (half/per_side)·i` for `i ∈ {−per_side, …, per_side}^k`.
fn grid(center: &[f64], half: f64, per_side: i64, k: usize) -> impl Iterator<Item = Vec<f64>> + '_ {
    let h = half / per_side as f64;
    let side = (2 * per_side + 1) as usize;
    (0..side.pow(k as u32)).map(move |mut code| {
        (0..k)
            .map(|d| {
                let i = (code % side) as i64 - per_side;
                code /= side;
                center[d] + h * i as f64
            })
            .collect()
    })
}

/// Point of the boundary of a bounded convex set hit from `c0` along `dir`.
fn boundary_point(member: &dyn Fn(&[f64]) -> bool, c0: &[f64], dir: &[f64], scale: f64) -> Option<Vec<f64>> {
    let at = |t: f64| -> Vec<f64> { c0.iter().zip(dir).map(|(c, d)| c + t * d).collect() };
    let mut hi = scale;
    while member(&at(hi)) {
        hi *= 2.0;
        if hi > 1e8 * scale {
            return None;
        }
    }
    let mut lo = 0.0;
    while hi - lo > 1e-15 * scale {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if member(&at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(at(lo))
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let nv = norm2(&v);
    v.into_iter().map(|a| a / nv).collect()
}

/// Minimizes `quad` over the boundary, parametrized by directions from the
/// interior point `c0`: a global scan of the sphere, then a local search
/// around the two best directions.
fn boundary_search(
    member: &dyn Fn(&[f64]) -> bool,
    quad: &dyn Fn(&[f64]) -> f64,
    c0: &[f64],
    k: usize,
    scale: f64,
) -> Option<Vec<f64>> {
    let eval = |dir: &[f64]| -> Option<(f64, Vec<f64>)> {
        let p = boundary_point(member, c0, dir, scale)?;
        Some((quad(&p), p))
    };
    if k == 1 {
        let a = eval(&[1.0])?;
        let b = eval(&[-1.0])?;
        return Some(if a.0 <= b.0 { a.1 } else { b.1 });
    }

    let scan: Vec<Vec<f64>> = if k == 2 {
        (0..720).map(|i| {
            let t = i as f64 * std::f64::consts::TAU / 720.0;
            vec![t.cos(), t.sin()]
        })
        .collect()
    } else {
        // Fibonacci lattice on the sphere
        let m = 4000;
        let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
        (0..m)
            .map(|i| {
                let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                let r = (1.0 - z * z).sqrt();
                let phi = golden * i as f64;
                vec![r * phi.cos(), r * phi.sin(), z]
            })
            .collect()
    };
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::with_capacity(scan.len());
    for d in scan {
        scored.push((eval(&d)?.0, d));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut result: Option<(f64, Vec<f64>)> = None;
    for (_, d0) in scored.into_iter().take(2) {
        // tangent frame at d0; directions are d0 + Σ c_j e_j, normalized
        let frame: Vec<Vec<f64>> = if k == 2 {
            vec![vec![-d0[1], d0[0]]]
        } else {
            let pick = if d0[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let dot: f64 = pick.iter().zip(&d0).map(|(a, b)| a * b).sum();
            let e1 = unit(pick.iter().zip(&d0).map(|(a, b)| a - dot * b).collect());
            let e2 = vec![
                d0[1] * e1[2] - d0[2] * e1[1],
                d0[2] * e1[0] - d0[0] * e1[2],
                d0[0] * e1[1] - d0[1] * e1[0],
            ];
            vec![e1, e2]
        };
        let dir_of = |c: &[f64]| -> Vec<f64> {
            let mut v = d0.clone();
            for (cj, e) in c.iter().zip(&frame) {
                v.iter_mut().zip(e).for_each(|(a, b)| *a += cj * b);
            }
            unit(v)
        };
        let value_at = |c: &[f64]| eval(&dir_of(c)).map_or(f64::INFINITY, |r| r.0);
        let width = if k == 2 { 0.02 } else { 0.15 };
        // nested golden sections; the inner minimum follows creases of the
        // boundary, which a grid cannot resolve
        let best_c = if k == 2 {
            vec![golden(&|a| value_at(&[a]), -width, width)]
        } else {
            let inner = |a: f64| golden(&|b| value_at(&[a, b]), -width, width);
            let a = golden(&|a| value_at(&[a, inner(a)]), -width, width);
            vec![a, inner(a)]
        };
        let (v, p) = eval(&dir_of(&best_c))?;
        if result.as_ref().is_none_or(|r| v < r.0) {
            result = Some((v, p));
        }
    }
    result.map(|r| r.1)
}

/// Golden-section minimizer of a unimodal function on `[lo, hi]`.
fn golden(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-13 {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

fn orthonormalize(basis: &[Vec<f64>], n: usize) -> Result<Vec<Vec<f64>>> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    for b in basis {
        check_len(n, b.len())?;
        let mut v = b.clone();
        for e in &q {
            let c: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(e).for_each(|(a, b)| *a -= c * b);
        }
        let nv = norm2(&v);
        if nv < 1e-12 {
            return Err(Error::arg("basis directions are linearly dependent"));
        }
        q.push(v.into_iter().map(|a| a / nv).collect());
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let u = brute_force_prox(|u| u[0].abs(), 1.0, &[2.0]).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-6);
        let u = brute_force_prox(|_| 0.0, 1.0, &[0.3, -2.0]).unwrap();
        assert!(dist2(&u, &[0.3, -2.0]) < 1e-6);
        let ball = |u: &[f64]| if norm2(u) <= 1.0 { 0.0 } else { f64::INFINITY };
        let u = brute_force_prox(ball, 1.0, &[3.0, 4.0]).unwrap();
        assert!(dist2(&u, &[0.6, 0.8]) < 1e-6);
        assert!(brute_force_prox(|_| 0.0, 1.0, &[0.0; 4]).is_err());
    }

    #[test]
    fn affine_restriction() {
        // projection of (1, 1) on the line u0 + u1 = 1
        let u = brute_force_prox_affine(|_| 0.0, 1.0, &[1.0, 1.0], &[1.0, 0.0], &[vec![-1.0, 1.0]]).unwrap();
        assert!(dist2(&u, &[0.5, 0.5]) < 1e-6);
    }

    #[test]
    fn curved_and_slanted_sets() {
        let ball = |u: &[f64]| if norm2(u) <= 1.3 { 0.0 } else { f64::INFINITY };
        let x = [0.4, -2.0, 1.1];
        let u = brute_force_prox(ball, 0.7, &x).unwrap();
        let s = 1.3 / norm2(&x);
        let expect: Vec<f64> = x.iter().map(|v| v * s).collect();
        // comparison-based search resolves a smooth minimum to about sqrt(eps)
        assert!(dist2(&u, &expect) < 1e-7);

        // the triangle u ≥ 0, u0 + u1 ≤ 1; (2, 0.5) projects onto the hypotenuse at (1.25, −0.25)
        // clipped to the vertex (1, 0)
        let tri = |u: &[f64]| if u[0] >= 0.0 && u[1] >= 0.0 && u[0] + u[1] <= 1.0 { 0.0 } else { f64::INFINITY };
        let u = brute_force_prox(tri, 1.0, &[2.0, 0.5]).unwrap();
        assert!(dist2(&u, &[1.0, 0.0]) < 1e-8);
        let u = brute_force_prox(tri, 1.0, &[1.0, 0.6]).unwrap();
        assert!(dist2(&u, &[0.7, 0.3]) < 1e-8);
    }
}
