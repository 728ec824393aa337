use std::sync::Arc;

use super::{check_state_dim, SmoothSurrogate, State};
use crate::block::BlockPartition;
use crate::error::{Error, Result};
use crate::linalg::{dot, sym_spectral_norm};
use crate::problem::QuadraticComposite;

/// Forward-backward envelope of `½xᵀAx + bᵀx + ψ(x)`, `γL < 1`.
///
/// The cache holds `Ax`.
#[derive(Clone, Debug)]
pub struct FbSurrogate {
    problem: Arc<QuadraticComposite>,
    gamma: f64,
    lipschitz: Vec<f64>,
}

impl FbSurrogate {
    pub fn new(problem: Arc<QuadraticComposite>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) || gamma * problem.lipschitz_l >= 1.0 {
            return Err(Error::config(format!(
                "forward-backward envelope needs 0 < gamma*L < 1 (gamma = {gamma}, L = {})",
                problem.lipschitz_l
            )));
        }
        let part = &problem.partition;
        let lipschitz = (0..part.count())
            .map(|i| {
                let r = part.range(i);
                if r.len() == 1 {
                    (1.0 - gamma * problem.a.get(r.start, r.start)).abs() / gamma
                } else {
                    let dense = problem.a.to_dense();
                    let blk = dense.view((r.start, r.start), (r.len(), r.len())).into_owned();
                    let m = nalgebra::DMatrix::identity(r.len(), r.len()) - blk * gamma;
                    sym_spectral_norm(&m) * (1.0 + 1e-8) / gamma
                }
            })
            .collect();
        Ok(FbSurrogate { problem, gamma, lipschitz })
    }

    pub fn problem(&self) -> &QuadraticComposite {
        &self.problem
    }

    fn forward(&self, s: &State) -> Vec<f64> {
        // x − γ(Ax + b)
        s.x.iter()
            .zip(&s.cache)
            .zip(&self.problem.b)
            .map(|((x, ax), b)| x - self.gamma * (ax + b))
            .collect()
    }

    fn residual(&self, s: &State) -> Result<Vec<f64>> {
        let z = self.problem.psi.prox(self.gamma, &self.forward(s))?;
        Ok(s.x.iter().zip(&z).map(|(x, z)| x - z).collect())
    }
}

impl SmoothSurrogate for FbSurrogate {
    fn name(&self) -> &'static str {
        "fb"
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
        Ok(State { x: x.to_vec(), cache: self.problem.a.mul_vec(x) })
    }

    fn cache_step(&self, cache: &mut [f64], i: usize, h: &[f64]) {
        for (j, hj) in self.partition().range(i).zip(h) {
            self.problem.a.col_axpy(j, *hj, cache);
        }
    }

    fn value(&self, s: &State) -> Result<f64> {
        let p = &self.problem;
        let grad: Vec<f64> = s.cache.iter().zip(&p.b).map(|(ax, b)| ax + b).collect();
        let f = 0.5 * dot(&s.x, &s.cache) + dot(&p.b, &s.x) + p.constant;
        let (env, _) = p.psi.moreau(self.gamma, &self.forward(s))?;
        Ok(f - 0.5 * self.gamma * dot(&grad, &grad) + env)
    }

    fn coord_grad(&self, s: &State, i: usize) -> Result<Vec<f64>> {
        let d = self.residual(s)?;
        let a = &self.problem.a;
        Ok(self
            .partition()
            .range(i)
            .map(|j| (d[j] - self.gamma * a.col_dot(j, &d)) / self.gamma)
            .collect())
    }

    fn full_grad(&self, s: &State) -> Result<Vec<f64>> {
        let d = self.residual(s)?;
        let ad = self.problem.a.mul_vec(&d);
        Ok(d.iter().zip(&ad).map(|(di, adi)| (di - self.gamma * adi) / self.gamma).collect())
    }

    fn map_b(&self, s: &State) -> Result<Vec<f64>> {
        self.problem.psi.prox(self.gamma, &self.forward(s))
    }

    fn map_c(&self, s: &State) -> Result<Vec<f64>> {
        Ok(s.x.clone())
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.problem.objective(x)
    }
}
