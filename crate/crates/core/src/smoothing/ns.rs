use std::sync::Arc;

use nalgebra::DMatrix;

use super::{check_state_dim, SmoothSurrogate, State};
use crate::block::BlockPartition;
use crate::error::{Error, Result};
use crate::linalg::{norm2, spectral_norm, sym_spectral_norm};
use crate::problem::{DualDomain, SaddleProblem};

/// Nesterov smoothing `F_γ(x) = f(x) + max_u ⟨Ax − b, u⟩ − γd(u)`.
///
/// The cache is `[f-product | Ax]`.
#[derive(Clone, Debug)]
pub struct NsSurrogate {
    problem: Arc<SaddleProblem>,
    gamma: f64,
    lipschitz: Vec<f64>,
    split: usize,
}

impl NsSurrogate {
    pub fn new(problem: Arc<SaddleProblem>, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::config("gamma must be positive"));
        }
        let part = &problem.partition;
        let lf = problem.f.block_lipschitz(part);
        let a = &problem.a;
        let w = problem.row_sq_norms();
        let mut lipschitz: Vec<f64> = (0..part.count())
            .map(|i| {
                let r = part.range(i);
                let dual_sq = if r.len() == 1 {
                    let j = r.start;
                    let mut col = vec![0.0; a.nrows()];
                    a.col_axpy(j, 1.0, &mut col);
                    match problem.domain {
                        DualDomain::Simplex => col.iter().fold(0.0f64, |m, v| m.max(v * v)),
                        DualDomain::Box => col.iter().zip(w).filter(|(_, w)| **w > 0.0).map(|(v, w)| v * v / w).sum(),
                        DualDomain::UnitBall => col.iter().map(|v| v * v).sum(),
                    }
                } else {
                    let blk = a.column_block(r.start, r.len());
                    let v = match problem.domain {
                        DualDomain::Simplex => (0..blk.nrows()).map(|k| blk.row(k).norm_squared()).fold(0.0, f64::max),
                        DualDomain::Box => {
                            let scaled = DMatrix::from_fn(blk.nrows(), blk.ncols(), |k, c| {
                                if w[k] > 0.0 {
                                    blk[(k, c)] / w[k].sqrt()
                                } else {
                                    0.0
                                }
                            });
                            sym_spectral_norm(&(scaled.transpose() * &scaled))
                        }
                        DualDomain::UnitBall => spectral_norm(&blk).powi(2),
                    };
                    v * (1.0 + 1e-8)
                };
                lf[i] + dual_sq / gamma
            })
            .collect();
        let floor = 1e-12 * lipschitz.iter().cloned().fold(0.0, f64::max).max(1e-300);
        lipschitz.iter_mut().for_each(|l| *l = l.max(floor));
        let split = problem.f.cache_len();
        Ok(NsSurrogate { problem, gamma, lipschitz, split })
    }

    pub fn problem(&self) -> &SaddleProblem {
        &self.problem
    }

    fn residual(&self, s: &State) -> Vec<f64> {
        s.cache[self.split..].iter().zip(&self.problem.shift).map(|(ax, b)| ax - b).collect()
    }

    /// Effective dual vector `y` with `∇(term) = Aᵀy`, plus the smoothed term value.
    fn dual(&self, r: &[f64]) -> (Vec<f64>, f64) {
        let g = self.gamma;
        match self.problem.domain {
            DualDomain::Simplex => {
                // entries (r, −r) of a 2m-simplex with entropy relative to uniform
                let m = r.len();
                let top = r.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
                let mut ep = Vec::with_capacity(m);
                let mut em = Vec::with_capacity(m);
                let mut z = 0.0;
                for &v in r {
                    let a = ((v - top) / g).exp();
                    let b = ((-v - top) / g).exp();
                    z += a + b;
                    ep.push(a);
                    em.push(b);
                }
                let y = ep.iter().zip(&em).map(|(a, b)| (a - b) / z).collect();
                let val = top + g * (z / (2.0 * m as f64)).ln();
                (y, val)
            }
            DualDomain::Box => {
                let w = self.problem.row_sq_norms();
                let mut val = 0.0;
                let y = r
                    .iter()
                    .zip(w)
                    .map(|(&rj, &wj)| {
                        if wj > 0.0 && rj.abs() <= g * wj {
                            val += rj * rj / (2.0 * g * wj);
                            rj / (g * wj)
                        } else {
                            val += rj.abs() - 0.5 * g * wj;
                            rj.signum()
                        }
                    })
                    .collect();
                (y, val)
            }
            DualDomain::UnitBall => {
                let nr = norm2(r);
                if nr <= g {
                    (r.iter().map(|v| v / g).collect(), nr * nr / (2.0 * g))
                } else {
                    (r.iter().map(|v| v / nr).collect(), nr - 0.5 * g)
                }
            }
        }
    }

    /// Maximizer `u_γ(x)` expressed as the effective multiplier on the rows of `A`.
    pub fn dual_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        let s = self.state(x)?;
        Ok(self.dual(&self.residual(&s)).0)
    }
}

impl SmoothSurrogate for NsSurrogate {
    fn name(&self) -> &'static str {
        "ns"
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
        self.problem.d_bar()
    }

    fn state(&self, x: &[f64]) -> Result<State> {
        check_state_dim(self.partition(), x)?;
        let mut cache = self.problem.f.product(x);
        cache.extend(self.problem.a.mul_vec(x));
        Ok(State { x: x.to_vec(), cache })
    }

    fn cache_step(&self, cache: &mut [f64], i: usize, h: &[f64]) {
        let (fc, ac) = cache.split_at_mut(self.split);
        for (j, hj) in self.partition().range(i).zip(h) {
            self.problem.f.product_step(j, *hj, fc);
            self.problem.a.col_axpy(j, *hj, ac);
        }
    }

    fn value(&self, s: &State) -> Result<f64> {
        let f = self.problem.f.value_cached(&s.x, &s.cache[..self.split]);
        Ok(f + self.dual(&self.residual(s)).1)
    }

    fn coord_grad(&self, s: &State, i: usize) -> Result<Vec<f64>> {
        let (y, _) = self.dual(&self.residual(s));
        let fc = &s.cache[..self.split];
        Ok(self
            .partition()
            .range(i)
            .map(|j| self.problem.f.partial_cached(j, fc) + self.problem.a.col_dot(j, &y))
            .collect())
    }

    fn full_grad(&self, s: &State) -> Result<Vec<f64>> {
        let (y, _) = self.dual(&self.residual(s));
        let fc = &s.cache[..self.split];
        let aty = self.problem.a.tr_mul_vec(&y);
        Ok((0..s.x.len()).map(|j| self.problem.f.partial_cached(j, fc) + aty[j]).collect())
    }

    fn map_b(&self, s: &State) -> Result<Vec<f64>> {
        Ok(s.x.clone())
    }

    fn map_c(&self, s: &State) -> Result<Vec<f64>> {
        Ok(s.x.clone())
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.problem.objective(x)
    }
}
