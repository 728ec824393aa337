use std::sync::Arc;

use nalgebra::DMatrix;

use crate::block::BlockPartition;
use crate::bregman::QuarticProblem;
use crate::error::{Error, Result};
use crate::linalg::{CscMatrix, Matrix};
use crate::problem::{difference_matrix, scaled_identity, QuadraticComposite, SaddleProblem, SmoothPart};
use crate::prox::ProxOracle;
use crate::rng::Pcg64;

/// A generated composite problem `½‖Bx − c‖² + ψ(x)` with its saddle view
/// and starting point.
#[derive(Clone, Debug)]
pub struct Instance {
    pub composite: Arc<QuadraticComposite>,
    pub saddle: Option<Arc<SaddleProblem>>,
    pub design: Matrix,
    pub target: Vec<f64>,
    pub x0: Vec<f64>,
}

impl Instance {
    /// Builds `A = BᵀB`, `b = −Bᵀc` and constant `½‖c‖²` from the design.
    pub fn from_design(design: Matrix, target: Vec<f64>, psi: ProxOracle, x0: Vec<f64>) -> Result<Self> {
        let n = design.ncols();
        let a = Matrix::Dense(design.transpose_times_self());
        let b: Vec<f64> = design.tr_mul_vec(&target).into_iter().map(|v| -v).collect();
        let constant = 0.5 * target.iter().map(|v| v * v).sum::<f64>();
        let composite = QuadraticComposite::new(a, b, psi.clone(), BlockPartition::scalar(n))?.with_constant(constant);
        let f = SmoothPart::LeastSquares { b: design.clone(), c: target.clone() };
        let part = BlockPartition::scalar(n);
        let saddle = match psi {
            ProxOracle::L2Norm { lambda } => Some(SaddleProblem::smoothed_norm(f, scaled_identity(n, lambda), vec![0.0; n], part)?),
            ProxOracle::L1Norm { lambda } if lambda > 0.0 => {
                Some(SaddleProblem::l1_residual(f, scaled_identity(n, lambda), vec![0.0; n], part)?)
            }
            ProxOracle::Tv1d { lambda } if lambda > 0.0 && n >= 2 => {
                Some(SaddleProblem::l1_residual(f, difference_matrix(n, lambda), vec![0.0; n - 1], part)?)
            }
            _ => None,
        };
        Ok(Instance { composite: Arc::new(composite), saddle: saddle.map(Arc::new), design, target, x0 })
    }

    pub fn dim(&self) -> usize {
        self.composite.dim()
    }
}

fn check_dims(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::arg(format!("dimensions must be at least 1, got n = {n}, m = {m}")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::arg(format!("lambda must be nonnegative, got {lambda}")));
    }
    Ok(())
}

/// Sparse `m×n` matrix with density `density` and standard normal entries.
pub fn sparse_normal(rng: &mut Pcg64, m: usize, n: usize, density: f64) -> Result<Matrix> {
    let mut t = Vec::new();
    for j in 0..n {
        for i in 0..m {
            if rng.next_f64() < density {
                t.push((i, j, rng.normal()));
            }
        }
    }
    Ok(Matrix::Csc(CscMatrix::from_triplets(m, n, t)?))
}

/// `½‖Bx − c‖² + λ‖x‖` with sparse Gaussian `B` (density 0.1), Gaussian `c`
/// and Gaussian starting point.
pub fn gen_quadratic_l2(n: usize, m: usize, lambda: f64, seed: u64) -> Result<Instance> {
    check_dims(n, m)?;
    check_lambda(lambda)?;
    let mut rng = Pcg64::seed_from(seed);
    let b = sparse_normal(&mut rng, m, n, 0.1)?;
    let c = rng.normal_vec(m);
    let x0 = rng.normal_vec(n);
    Instance::from_design(b, c, ProxOracle::L2Norm { lambda }, x0)
}

/// `½‖Bx − c‖² + λ‖x‖₁` with dense Gaussian `B` scaled by `1/√m`.
pub fn gen_quadratic_l1(n: usize, m: usize, lambda: f64, seed: u64) -> Result<Instance> {
    check_dims(n, m)?;
    check_lambda(lambda)?;
    let mut rng = Pcg64::seed_from(seed);
    let s = 1.0 / (m as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..m).map(|_| rng.normal_vec(n).into_iter().map(|v| v * s).collect()).collect();
    let b = Matrix::from_rows(&rows)?;
    let c = rng.normal_vec(m);
    let x0 = rng.normal_vec(n);
    Instance::from_design(b, c, ProxOracle::L1Norm { lambda }, x0)
}

/// `½‖x − c‖² + λ‖x‖₁` with `c ~ N(0, 4I)`: strongly convex, minimizer in
/// closed form by soft thresholding.
pub fn gen_identity_l1(n: usize, lambda: f64, seed: u64) -> Result<Instance> {
    check_dims(n, 1)?;
    check_lambda(lambda)?;
    let mut rng = Pcg64::seed_from(seed);
    let c: Vec<f64> = rng.normal_vec(n).into_iter().map(|v| 2.0 * v).collect();
    let x0 = rng.normal_vec(n);
    Instance::from_design(Matrix::identity(n), c, ProxOracle::L1Norm { lambda }, x0)
}

/// Product of `count` random Givens rotations, as a dense orthogonal matrix.
pub fn random_givens(rng: &mut Pcg64, n: usize, count: usize) -> DMatrix<f64> {
    let mut q = DMatrix::<f64>::identity(n, n);
    if n < 2 {
        return q;
    }
    for _ in 0..count {
        let i = rng.below(n);
        let mut j = rng.below(n - 1);
        if j >= i {
            j += 1;
        }
        let theta = rng.uniform(0.0, std::f64::consts::TAU);
        let (s, c) = theta.sin_cos();
        for col in 0..n {
            let (a, b) = (q[(i, col)], q[(j, col)]);
            q[(i, col)] = c * a - s * b;
            q[(j, col)] = s * a + c * b;
        }
    }
    q
}

/// Spectrum `(100, U(0,1) × (⌈n/2⌉ − 1), 0 × ⌊n/2⌋)`; odd `n` gives the
/// extra entry to the random part.
pub fn tv_spectrum(rng: &mut Pcg64, n: usize) -> Vec<f64> {
    let mut d = vec![0.0; n];
    if n == 0 {
        return d;
    }
    d[0] = 100.0;
    let random = n.div_ceil(2) - 1;
    for v in d.iter_mut().skip(1).take(random) {
        *v = rng.next_f64();
    }
    d
}

/// `½‖Bx − c‖² + λ TV(x)` with `B = QᵀCQ`, `Q` a product of `5n` random
/// Givens rotations and `C` diagonal with [`tv_spectrum`].
pub fn gen_quadratic_tv(n: usize, lambda: f64, seed: u64) -> Result<Instance> {
    if n < 2 {
        return Err(Error::arg("total variation problems need n >= 2"));
    }
    check_lambda(lambda)?;
    let mut rng = Pcg64::seed_from(seed);
    let q = random_givens(&mut rng, n, 5 * n);
    let d = tv_spectrum(&mut rng, n);
    let c_mat = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
    let b = q.transpose() * c_mat * &q;
    let c = rng.normal_vec(n);
    let x0 = rng.normal_vec(n);
    Instance::from_design(Matrix::Dense(b), c, ProxOracle::Tv1d { lambda }, x0)
}

/// Quartic instance for relative coordinate descent: `E` and `A` are
/// `m×n` Gaussian scaled by `1/√n`, `b` Gaussian scaled likewise, and the
/// quadratic part is `½‖x‖² + ⟨q, x⟩` with Gaussian `q`.
pub fn gen_quartic(n: usize, m: usize, seed: u64) -> Result<(QuarticProblem, Vec<f64>)> {
    check_dims(n, m)?;
    let mut rng = Pcg64::seed_from(seed);
    let s = 1.0 / (n as f64).sqrt();
    let mut gauss = |r: usize, c: usize| -> Vec<Vec<f64>> {
        (0..r).map(|_| rng.normal_vec(c).into_iter().map(|v| v * s).collect()).collect()
    };
    let e = Matrix::from_rows(&gauss(m, n))?;
    let a = Matrix::from_rows(&gauss(m, n))?;
    let b = gauss(1, m).pop().unwrap_or_default();
    let q_lin = rng.normal_vec(n);
    let x0 = rng.normal_vec(n);
    let p = QuarticProblem::new(e, a, b, Matrix::identity(n), q_lin, BlockPartition::scalar(n))?;
    Ok((p, x0))
}
