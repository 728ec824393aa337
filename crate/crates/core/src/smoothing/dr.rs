use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix};

use super::{check_state_dim, SmoothSurrogate, State};
use crate::block::BlockPartition;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2_sq, sym_spectral_norm, CscMatrix, Matrix};
use crate::problem::QuadraticComposite;

/// Douglas-Rachford envelope of `½xᵀAx + bᵀx + ψ(x)`, `γL < 1`.
///
/// With `H = (I + γA)⁻¹`, `prox_{γf}(x) = H(x − γb)`; the cache holds `Hx`.
#[derive(Clone, Debug)]
pub struct DrSurrogate {
    problem: Arc<QuadraticComposite>,
    gamma: f64,
    h: Matrix,
    hb: Vec<f64>,
    lipschitz: Vec<f64>,
}

impl DrSurrogate {
    pub fn new(problem: Arc<QuadraticComposite>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || gamma * problem.lipschitz_l >= 1.0 {
            return Err(Error::config(format!(
                "Douglas-Rachford envelope needs 0 < gamma*L < 1 (gamma = {gamma}, L = {})",
                problem.lipschitz_l
            )));
        }
        let n = problem.dim();
        let h = if problem.a.is_diagonal() {
            let d = problem.a.diagonal();
            let t = d.iter().enumerate().map(|(i, a)| (i, i, 1.0 / (1.0 + gamma * a))).collect();
            Matrix::Csc(CscMatrix::from_triplets(n, n, t).expect("valid"))
        } else {
            let m = DMatrix::identity(n, n) + problem.a.to_dense() * gamma;
            let chol = Cholesky::new(m).ok_or_else(|| Error::Factorization("I + γA is not positive definite".into()))?;
            let inv = chol.inverse();
            // symmetrize round-off
            Matrix::Dense((&inv + inv.transpose()) * 0.5)
        };
        let hb = h.mul_vec(&problem.b);

        // L_i = ‖[P + P²]_ii‖/γ with P = 2H − I, i.e. the diagonal block of 4H² − 2H.
        let part = &problem.partition;
        let lipschitz = (0..part.count())
            .map(|i| {
                let r = part.range(i);
                let val = if r.len() == 1 {
                    let j = r.start;
                    4.0 * h.col_sq_norm(j) - 2.0 * h.get(j, j)
                } else {
                    let cols = h.column_block(r.start, r.len());
                    let blk_sq = cols.transpose() * &cols;
                    let blk = cols.rows(r.start, r.len()).into_owned();
                    sym_spectral_norm(&(blk_sq * 4.0 - blk * 2.0))
                };
                val.abs() * (1.0 + 1e-8) / gamma
            })
            .collect();
        Ok(DrSurrogate { problem, gamma, h, hb, lipschitz })
    }

    /// `(û, v̂)` with `û = prox_{γf}(x)`, `v̂ = prox_{γψ}(2û − x)`.
    fn points(&self, s: &State) -> Result<(Vec<f64>, Vec<f64>)> {
        let u: Vec<f64> = s.cache.iter().zip(&self.hb).map(|(hx, hb)| hx - self.gamma * hb).collect();
        let refl: Vec<f64> = u.iter().zip(&s.x).map(|(u, x)| 2.0 * u - x).collect();
        let v = self.problem.psi.prox(self.gamma, &refl)?;
        Ok((u, v))
    }
}

impl SmoothSurrogate for DrSurrogate {
    fn name(&self) -> &'static str {
        "dr"
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn partition(&self) -> &BlockPartition {
        &self.problem.partition
    }

    fn coord_lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    fn gap(&self) -> f64 {
        0.0
    }

    fn state(&self, x: &[f64]) -> Result<State> {
        check_state_dim(self.partition(), x)?;
        Ok(State { x: x.to_vec(), cache: self.h.mul_vec(x) })
    }

    fn cache_step(&self, cache: &mut [f64], i: usize, h: &[f64]) {
        for (j, hj) in self.partition().range(i).zip(h) {
            self.h.col_axpy(j, *hj, cache);
        }
    }

    fn value(&self, s: &State) -> Result<f64> {
        let p = &self.problem;
        let g = self.gamma;
        let (u, _) = self.points(s)?;
        // (I + γA)u = x − γb gives Au without another product
        let au: Vec<f64> = s.x.iter().zip(&u).zip(&p.b).map(|((x, u), b)| (x - g * b - u) / g).collect();
        let f_u = 0.5 * dot(&u, &au) + dot(&p.b, &u) + p.constant;
        let diff_sq = norm2_sq(&u.iter().zip(&s.x).map(|(u, x)| u - x).collect::<Vec<_>>());
        let f_env = f_u + diff_sq / (2.0 * g);
        let refl: Vec<f64> = u.iter().zip(&s.x).map(|(u, x)| 2.0 * u - x).collect();
        let (psi_env, _) = p.psi.moreau(g, &refl)?;
        Ok(f_env - diff_sq / g + psi_env)
    }

    fn coord_grad(&self, s: &State, i: usize) -> Result<Vec<f64>> {
        let (u, v) = self.points(s)?;
        let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        Ok(self
            .partition()
            .range(i)
            .map(|j| (2.0 * self.h.col_dot(j, &d) - d[j]) / self.gamma)
            .collect())
    }

    fn full_grad(&self, s: &State) -> Result<Vec<f64>> {
        let (u, v) = self.points(s)?;
        let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let hd = self.h.mul_vec(&d);
        Ok(hd.iter().zip(&d).map(|(hd, d)| (2.0 * hd - d) / self.gamma).collect())
    }

    fn map_b(&self, s: &State) -> Result<Vec<f64>> {
        Ok(self.points(s)?.1)
    }

    fn map_c(&self, s: &State) -> Result<Vec<f64>> {
        Ok(self.points(s)?.0)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.problem.objective(x)
    }
}
