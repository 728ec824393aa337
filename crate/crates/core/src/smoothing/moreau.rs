use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{check_state_dim, SmoothSurrogate, State};
use crate::block::BlockPartition;
use crate::error::{Error, Result};
use crate::linalg::{dist2, dot, norm2, norm2_sq};
use crate::problem::QuadraticComposite;
use crate::prox::ProxOracle;

/// Settings of the iterative prox used when `prox_{γF}` has no closed form.
#[derive(Clone, Copy, Debug)]
pub struct InnerProxOptions {
    /// Stop when the gradient-mapping norm drops below `tol/γ`.
    pub tol: f64,
    pub max_iter: usize,
    /// Use the iterative solver even when an exact route exists.
    pub force_iterative: bool,
}

impl Default for InnerProxOptions {
    fn default() -> Self {
        InnerProxOptions { tol: 1e-10, max_iter: 100_000, force_iterative: false }
    }
}

#[derive(Clone, Debug)]
enum Target {
    /// `F = ψ` with its own prox.
    Oracle(ProxOracle),
    /// `F = ½xᵀAx + bᵀx + λ‖x‖₂`, solved in the eigenbasis of `A`.
    Spectral {
        problem: Arc<QuadraticComposite>,
        /// `Vᵀ` with `A = V diag(ev) Vᵀ`; column `j` is row `j` of `V`.
        vt: DMatrix<f64>,
        /// `ev + 1/γ`
        shifted: Vec<f64>,
        vtb: Vec<f64>,
        lambda: f64,
    },
    /// Any composite, via accelerated proximal gradient.
    Iterative { problem: Arc<QuadraticComposite>, opts: InnerProxOptions },
}

/// Moreau envelope `F_γ(x) = min_z F(z) + ‖z − x‖²/(2γ)`.
#[derive(Clone, Debug)]
pub struct MoreauSurrogate {
    target: Target,
    gamma: f64,
    partition: BlockPartition,
    lipschitz: Vec<f64>,
}

impl MoreauSurrogate {
    pub fn of_oracle(psi: ProxOracle, partition: BlockPartition, gamma: f64) -> Result<Self> {
        psi.validate(partition.dim())?;
        Self::build(Target::Oracle(psi), partition, gamma)
    }

    pub fn of_composite(problem: Arc<QuadraticComposite>, gamma: f64, opts: InnerProxOptions) -> Result<Self> {
        let partition = problem.partition.clone();
        let lambda = match problem.psi {
            ProxOracle::Zero => Some(0.0),
            ProxOracle::L2Norm { lambda } => Some(lambda),
            _ => None,
        };
        let target = match lambda {
            Some(lambda) if !opts.force_iterative => {
                if !(gamma > 0.0) {
                    return Err(Error::config("gamma must be positive"));
                }
                let eig = SymmetricEigen::new(problem.a.to_dense());
                let vt = eig.eigenvectors.transpose();
                let shifted = eig.eigenvalues.iter().map(|e| e.max(0.0) + 1.0 / gamma).collect();
                let vtb = (&vt * nalgebra::DVector::from_column_slice(&problem.b)).iter().copied().collect();
                Target::Spectral { problem, vt, shifted, vtb, lambda }
            }
            _ => Target::Iterative { problem, opts },
        };
        Self::build(target, partition, gamma)
    }

    fn build(target: Target, partition: BlockPartition, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::config("gamma must be positive"));
        }
        let lipschitz = vec![1.0 / gamma; partition.count()];
        Ok(MoreauSurrogate { target, gamma, partition, lipschitz })
    }

    /// Coefficients `s` with `prox = −V (s ∘ w)`, `w = Vᵀb − Vᵀx/γ`.
    fn spectral_coefficients(&self, s: &State) -> (Vec<f64>, Vec<f64>) {
        let Target::Spectral { shifted, vtb, lambda, .. } = &self.target else { unreachable!() };
        let w: Vec<f64> = vtb.iter().zip(&s.cache).map(|(b, c)| b - c / self.gamma).collect();
        let lam = *lambda;
        if lam == 0.0 {
            let sc = shifted.iter().map(|d| 1.0 / d).collect();
            return (w, sc);
        }
        if norm2(&w) <= lam {
            return (w, vec![0.0; shifted.len()]);
        }
        // ρ(t) = Σ w_k²/(d_k t + λ)² − 1 is convex and decreasing: Newton
        // from t = 0 increases monotonically to the root.
        let mut t = 0.0f64;
        for _ in 0..200 {
            let mut rho = -1.0;
            let mut drho = 0.0;
            for (wk, dk) in w.iter().zip(shifted) {
                let den = dk * t + lam;
                rho += wk * wk / (den * den);
                drho -= 2.0 * wk * wk * dk / (den * den * den);
            }
            if rho <= 0.0 || drho == 0.0 {
                break;
            }
            let next = t - rho / drho;
            if next - t <= 1e-16 * next {
                t = next;
                break;
            }
            t = next;
        }
        let sc = shifted.iter().map(|d| t / (d * t + lam)).collect();
        (w, sc)
    }

    fn iterative_prox(problem: &QuadraticComposite, gamma: f64, opts: &InnerProxOptions, x: &[f64]) -> Result<Vec<f64>> {
        let mu = 1.0 / gamma;
        let lg = problem.lipschitz_l + mu;
        let q = (lg.sqrt() - mu.sqrt()) / (lg.sqrt() + mu.sqrt());
        let mut u = x.to_vec();
        let mut v = u.clone();
        for _ in 0..opts.max_iter {
            let mut g = problem.smooth_grad(&v);
            for ((gi, vi), xi) in g.iter_mut().zip(&v).zip(x) {
                *gi += (vi - xi) * mu;
            }
            let step: Vec<f64> = v.iter().zip(&g).map(|(vi, gi)| vi - gi / lg).collect();
            let next = problem.psi.prox(1.0 / lg, &step)?;
            let gm = lg * dist2(&v, &next);
            let mut nv = next.clone();
            for ((nvi, ni), ui) in nv.iter_mut().zip(&next).zip(&u) {
                *nvi = ni + q * (ni - ui);
            }
            u = next;
            v = nv;
            if gm <= opts.tol * mu {
                break;
            }
        }
        Ok(u)
    }

    /// `prox_{γF}(x)` for the state's iterate.
    pub fn prox_point(&self, s: &State) -> Result<Vec<f64>> {
        match &self.target {
            Target::Oracle(psi) => psi.prox(self.gamma, &s.x),
            Target::Spectral { vt, .. } => {
                let (w, sc) = self.spectral_coefficients(s);
                let sw: Vec<f64> = w.iter().zip(&sc).map(|(a, b)| a * b).collect();
                let n = vt.ncols();
                Ok((0..n).map(|j| -dot(vt.column(j).as_slice(), &sw)).collect())
            }
            Target::Iterative { problem, opts } => Self::iterative_prox(problem, self.gamma, opts, &s.x),
        }
    }

    fn f_at(&self, z: &[f64]) -> f64 {
        match &self.target {
            Target::Oracle(psi) => {
                if psi.is_indicator() {
                    0.0
                } else {
                    psi.value(z)
                }
            }
            Target::Spectral { problem, .. } | Target::Iterative { problem, .. } => {
                let psi = if problem.psi.is_indicator() { 0.0 } else { problem.psi.value(z) };
                problem.smooth_value(z) + psi
            }
        }
    }
}

impl SmoothSurrogate for MoreauSurrogate {
    fn name(&self) -> &'static str {
        "moreau"
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn coord_lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }

    fn gap(&self) -> f64 {
        0.0
    }

    fn inexact(&self) -> bool {
        matches!(self.target, Target::Iterative { .. })
    }

    fn state(&self, x: &[f64]) -> Result<State> {
        check_state_dim(&self.partition, x)?;
        let cache = match &self.target {
            Target::Spectral { vt, .. } => (vt * nalgebra::DVector::from_column_slice(x)).iter().copied().collect(),
            _ => Vec::new(),
        };
        Ok(State { x: x.to_vec(), cache })
    }

    fn cache_step(&self, cache: &mut [f64], i: usize, h: &[f64]) {
        if let Target::Spectral { vt, .. } = &self.target {
            for (j, hj) in self.partition.range(i).zip(h) {
                for (c, v) in cache.iter_mut().zip(vt.column(j).iter()) {
                    *c += hj * v;
                }
            }
        }
    }

    fn value(&self, s: &State) -> Result<f64> {
        let z = self.prox_point(s)?;
        Ok(self.f_at(&z) + norm2_sq(&z.iter().zip(&s.x).map(|(a, b)| a - b).collect::<Vec<_>>()) / (2.0 * self.gamma))
    }

    fn coord_grad(&self, s: &State, i: usize) -> Result<Vec<f64>> {
        let r = self.partition.range(i);
        if let Target::Spectral { vt, .. } = &self.target {
            let (w, sc) = self.spectral_coefficients(s);
            let sw: Vec<f64> = w.iter().zip(&sc).map(|(a, b)| a * b).collect();
            return Ok(r
                .map(|j| (s.x[j] + dot(vt.column(j).as_slice(), &sw)) / self.gamma)
                .collect());
        }
        let z = self.prox_point(s)?;
        Ok(r.map(|j| (s.x[j] - z[j]) / self.gamma).collect())
    }

    fn full_grad(&self, s: &State) -> Result<Vec<f64>> {
        let z = self.prox_point(s)?;
        Ok(s.x.iter().zip(&z).map(|(a, b)| (a - b) / self.gamma).collect())
    }

    fn map_b(&self, s: &State) -> Result<Vec<f64>> {
        self.prox_point(s)
    }

    fn map_c(&self, s: &State) -> Result<Vec<f64>> {
        Ok(s.x.clone())
    }

    fn objective(&self, x: &[f64]) -> f64 {
        match &self.target {
            Target::Oracle(psi) => psi.value(x),
            Target::Spectral { problem, .. } | Target::Iterative { problem, .. } => problem.objective(x),
        }
    }
}
