//! Problem records: the quadratic-plus-prox composite and the max-structured
//! saddle form used by Nesterov smoothing.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::block::BlockPartition;
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm2, norm2_sq, spectral_norm, sym_max_eigenvalue, sym_spectral_norm, CscMatrix, Matrix};
use crate::prox::ProxOracle;
use crate::rng::Pcg64;

/// `F(x) = ½xᵀAx + bᵀx + c + ψ(x)` with `A` symmetric positive semidefinite.
#[derive(Clone, Debug)]
pub struct QuadraticComposite {
    pub a: Matrix,
    pub b: Vec<f64>,
    pub psi: ProxOracle,
    pub partition: BlockPartition,
    /// Upper bound on the largest eigenvalue of `A`.
    pub lipschitz_l: f64,
    /// Additive constant, e.g. `½‖c‖²` when `A = BᵀB`.
    pub constant: f64,
}

impl QuadraticComposite {
    pub fn new(a: Matrix, b: Vec<f64>, psi: ProxOracle, partition: BlockPartition) -> Result<Self> {
        let n = partition.dim();
        check_len(n, a.nrows())?;
        check_len(n, a.ncols())?;
        check_len(n, b.len())?;
        psi.validate(n)?;
        if !a.is_symmetric(1e-12) {
            return Err(Error::arg("quadratic matrix must be symmetric"));
        }
        let dense = a.to_dense();
        let scale = dense.amax().max(1.0);
        let mut rng = Pcg64::seed_from(0xa11ce);
        for _ in 0..8 {
            let v = rng.normal_vec(n);
            if dot(&v, &a.mul_vec(&v)) < -1e-10 * scale * norm2_sq(&v) {
                return Err(Error::arg("quadratic matrix is not positive semidefinite"));
            }
        }
        let lmax = sym_max_eigenvalue(&dense).max(0.0);
        let lipschitz_l = lmax * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        Ok(QuadraticComposite { a, b, psi, partition, lipschitz_l, constant: 0.0 })
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.constant = c;
        self
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    /// `½xᵀAx + bᵀx + c`
    pub fn smooth_value(&self, x: &[f64]) -> f64 {
        let ax = self.a.mul_vec(x);
        0.5 * dot(x, &ax) + dot(&self.b, x) + self.constant
    }

    pub fn smooth_grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.a.mul_vec(x);
        g.iter_mut().zip(&self.b).for_each(|(gi, bi)| *gi += bi);
        g
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.smooth_value(x) + self.psi.value(x)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "A": self.a,
            "b": self.b,
            "psi": self.psi.to_json(),
            "blocks": self.partition.sizes(),
            "constant": self.constant,
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            #[serde(rename = "A")]
            a: Matrix,
            b: Vec<f64>,
            psi: ProxOracle,
            blocks: Option<Vec<usize>>,
            #[serde(default)]
            constant: f64,
        }
        let doc: Doc = serde_json::from_value(v.clone())?;
        let n = doc.b.len();
        let partition = match doc.blocks {
            Some(sizes) => BlockPartition::new(sizes)?,
            None => BlockPartition::scalar(n),
        };
        Ok(Self::new(doc.a, doc.b, doc.psi, partition)?.with_constant(doc.constant))
    }
}

/// Smooth part `f` of a saddle problem.
#[derive(Clone, Debug)]
pub enum SmoothPart {
    Zero { n: usize },
    /// `½xᵀAx + bᵀx + c`
    Quadratic { a: Matrix, b: Vec<f64>, constant: f64 },
    /// `½‖Bx − c‖²`
    LeastSquares { b: Matrix, c: Vec<f64> },
}

impl SmoothPart {
    pub fn dim(&self) -> usize {
        match self {
            SmoothPart::Zero { n } => *n,
            SmoothPart::Quadratic { a, .. } => a.ncols(),
            SmoothPart::LeastSquares { b, .. } => b.ncols(),
        }
    }

    /// Length of the cached product (`Ax` or `Bx`).
    pub fn cache_len(&self) -> usize {
        match self {
            SmoothPart::Zero { .. } => 0,
            SmoothPart::Quadratic { a, .. } => a.nrows(),
            SmoothPart::LeastSquares { b, .. } => b.nrows(),
        }
    }

    pub fn product(&self, x: &[f64]) -> Vec<f64> {
        match self {
            SmoothPart::Zero { .. } => Vec::new(),
            SmoothPart::Quadratic { a, .. } => a.mul_vec(x),
            SmoothPart::LeastSquares { b, .. } => b.mul_vec(x),
        }
    }

    pub fn product_step(&self, j: usize, h: f64, cache: &mut [f64]) {
        match self {
            SmoothPart::Zero { .. } => {}
            SmoothPart::Quadratic { a, .. } => a.col_axpy(j, h, cache),
            SmoothPart::LeastSquares { b, .. } => b.col_axpy(j, h, cache),
        }
    }

    pub fn value_cached(&self, x: &[f64], cache: &[f64]) -> f64 {
        match self {
            SmoothPart::Zero { .. } => 0.0,
            SmoothPart::Quadratic { b, constant, .. } => 0.5 * dot(x, cache) + dot(b, x) + constant,
            SmoothPart::LeastSquares { c, .. } => {
                0.5 * cache.iter().zip(c).map(|(p, q)| (p - q) * (p - q)).sum::<f64>()
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.value_cached(x, &self.product(x))
    }

    /// Partial derivative along coordinate `j` from the cached product.
    pub fn partial_cached(&self, j: usize, cache: &[f64]) -> f64 {
        match self {
            SmoothPart::Zero { .. } => 0.0,
            SmoothPart::Quadratic { b, .. } => cache[j] + b[j],
            SmoothPart::LeastSquares { b, c } => {
                let mut s = 0.0;
                match b {
                    Matrix::Dense(m) => {
                        let r = m.nrows();
                        let col = &m.as_slice()[j * r..(j + 1) * r];
                        for k in 0..r {
                            s += col[k] * (cache[k] - c[k]);
                        }
                    }
                    Matrix::Csc(_) => {
                        s = b.col_dot(j, cache) - b.col_dot(j, c);
                    }
                }
                s
            }
        }
    }

    /// Per-block Lipschitz constants of `∇f`.
    pub fn block_lipschitz(&self, partition: &BlockPartition) -> Vec<f64> {
        (0..partition.count())
            .map(|i| {
                let r = partition.range(i);
                match self {
                    SmoothPart::Zero { .. } => 0.0,
                    SmoothPart::Quadratic { a, .. } => {
                        if r.len() == 1 {
                            a.get(r.start, r.start).abs()
                        } else {
                            let d = a.to_dense();
                            sym_spectral_norm(&d.view((r.start, r.start), (r.len(), r.len())).into_owned())
                                * (1.0 + 1e-8)
                        }
                    }
                    SmoothPart::LeastSquares { b, .. } => {
                        if r.len() == 1 {
                            b.col_sq_norm(r.start)
                        } else {
                            spectral_norm(&b.column_block(r.start, r.len())).powi(2) * (1.0 + 1e-8)
                        }
                    }
                }
            })
            .collect()
    }
}

/// Dual domain and prox-function pairing of a Nesterov-smoothable term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualDomain {
    /// `u` in the simplex of dimension `2m`, entropy prox-function; the term is `‖Ax − b‖_∞`.
    Simplex,
    /// `u ∈ [−1, 1]^m`, `d(u) = ½ Σ ‖e_jᵀA‖² u_j²`; the term is `‖Ax − b‖₁`.
    Box,
    /// `‖u‖ ≤ 1`, `d(u) = ½‖u‖²`; the term is `‖Ax − b‖₂`.
    UnitBall,
}

/// `F(x) = f(x) + max_{u ∈ Q} ⟨Ax − b, u⟩`
#[derive(Clone, Debug)]
pub struct SaddleProblem {
    pub f: SmoothPart,
    pub a: Matrix,
    pub shift: Vec<f64>,
    pub domain: DualDomain,
    pub partition: BlockPartition,
    row_sq_norms: Vec<f64>,
}

impl SaddleProblem {
    pub fn new(f: SmoothPart, a: Matrix, shift: Vec<f64>, domain: DualDomain, partition: BlockPartition) -> Result<Self> {
        let n = partition.dim();
        check_len(n, f.dim())?;
        check_len(n, a.ncols())?;
        check_len(a.nrows(), shift.len())?;
        if a.nrows() == 0 {
            return Err(Error::arg("saddle operator needs at least one row"));
        }
        let row_sq_norms = a.row_sq_norms();
        let p = SaddleProblem { f, a, shift, domain, partition, row_sq_norms };
        if !(p.d_bar() > 0.0 && p.d_bar().is_finite()) {
            return Err(Error::arg("prox-function bound must be positive and finite"));
        }
        Ok(p)
    }

    pub fn linf_residual(f: SmoothPart, a: Matrix, b: Vec<f64>, partition: BlockPartition) -> Result<Self> {
        Self::new(f, a, b, DualDomain::Simplex, partition)
    }

    pub fn l1_residual(f: SmoothPart, a: Matrix, b: Vec<f64>, partition: BlockPartition) -> Result<Self> {
        Self::new(f, a, b, DualDomain::Box, partition)
    }

    pub fn smoothed_norm(f: SmoothPart, a: Matrix, b: Vec<f64>, partition: BlockPartition) -> Result<Self> {
        Self::new(f, a, b, DualDomain::UnitBall, partition)
    }

    /// Saddle view of a composite whose `ψ` is a norm of a linear map.
    pub fn from_composite(p: &QuadraticComposite) -> Result<Self> {
        let n = p.dim();
        let f = SmoothPart::Quadratic { a: p.a.clone(), b: p.b.clone(), constant: p.constant };
        let part = p.partition.clone();
        match &p.psi {
            ProxOracle::L2Norm { lambda } => {
                Self::smoothed_norm(f, scaled_identity(n, *lambda), vec![0.0; n], part)
            }
            ProxOracle::L1Norm { lambda } => {
                Self::l1_residual(f, scaled_identity(n, *lambda), vec![0.0; n], part)
            }
            ProxOracle::Tv1d { lambda } => {
                if n < 2 {
                    return Err(Error::config("total variation needs n >= 2"));
                }
                Self::l1_residual(f, difference_matrix(n, *lambda), vec![0.0; n - 1], part)
            }
            other => Err(Error::config(format!(
                "ns smoothing is unsupported for psi kind {:?}; supported: l2norm, l1norm, tv1d",
                other.kind()
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn row_sq_norms(&self) -> &[f64] {
        &self.row_sq_norms
    }

    /// Maximum of the prox-function over the dual domain.
    pub fn d_bar(&self) -> f64 {
        match self.domain {
            DualDomain::Simplex => (2.0 * self.rows() as f64).ln().max(f64::MIN_POSITIVE),
            DualDomain::Box => 0.5 * self.row_sq_norms.iter().sum::<f64>(),
            DualDomain::UnitBall => 0.5,
        }
    }

    /// Exact value of the max-term at residual `r = Ax − b`.
    pub fn term_value(&self, r: &[f64]) -> f64 {
        match self.domain {
            DualDomain::Simplex => r.iter().fold(0.0f64, |m, v| m.max(v.abs())),
            DualDomain::Box => r.iter().map(|v| v.abs()).sum(),
            DualDomain::UnitBall => norm2(r),
        }
    }

    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a.mul_vec(x);
        r.iter_mut().zip(&self.shift).for_each(|(ri, bi)| *ri -= bi);
        r
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.f.value(x) + self.term_value(&self.residual(x))
    }
}

pub fn scaled_identity(n: usize, s: f64) -> Matrix {
    Matrix::Csc(CscMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, s)).collect()).expect("valid"))
}

/// `(n−1)×n` forward-difference matrix scaled by `s`: row `j` is `s(e_j − e_{j+1})`.
pub fn difference_matrix(n: usize, s: f64) -> Matrix {
    let mut t = Vec::with_capacity(2 * n);
    for j in 0..n.saturating_sub(1) {
        t.push((j, j, s));
        t.push((j, j + 1, -s));
    }
    Matrix::Csc(CscMatrix::from_triplets(n.saturating_sub(1), n, t).expect("valid"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> QuadraticComposite {
        let a = Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        QuadraticComposite::new(a, vec![1.0, -1.0], ProxOracle::L1Norm { lambda: 0.3 }, BlockPartition::scalar(2)).unwrap()
    }

    #[test]
    fn composite_checks() {
        let p = tiny();
        let ev = (3.0 + (1.0f64 + 1.0).sqrt()) / 2.0;
        assert!(p.lipschitz_l >= ev && p.lipschitz_l <= ev * (1.0 + 1e-10));
        let x = [1.0, 2.0];
        let expected = 0.5 * (2.0 + 2.0 * 0.5 * 2.0 + 4.0) + (1.0 - 2.0) + 0.3 * 3.0;
        assert!((p.objective(&x) - expected).abs() < 1e-14);

        let nonsym = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert!(QuadraticComposite::new(nonsym, vec![0.0; 2], ProxOracle::Zero, BlockPartition::scalar(2)).is_err());
        let indefinite = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(QuadraticComposite::new(indefinite, vec![0.0; 2], ProxOracle::Zero, BlockPartition::scalar(2)).is_err());
    }

    #[test]
    fn composite_json() {
        let p = tiny();
        let back = QuadraticComposite::from_json(&p.to_json()).unwrap();
        assert_eq!(back.a.to_dense(), p.a.to_dense());
        assert_eq!(back.psi.kind(), "l1norm");
        let doc = serde_json::json!({
            "A": {"format": "csc", "rows": 2, "cols": 2, "indptr": [0, 1, 2], "indices": [0, 1], "values": [1.0, 3.0]},
            "b": [0.0, 1.0],
            "psi": {"kind": "l2norm", "params": {"lambda": 0.5}},
            "blocks": [2]
        });
        let q = QuadraticComposite::from_json(&doc).unwrap();
        assert_eq!(q.partition.count(), 1);
        assert!((q.lipschitz_l - 3.0).abs() < 1e-9);
    }

    #[test]
    fn saddle_views() {
        let p = tiny();
        let s = SaddleProblem::from_composite(&p).unwrap();
        assert_eq!(s.domain, DualDomain::Box);
        let x = [0.7, -1.3];
        assert!((s.objective(&x) - p.objective(&x)).abs() < 1e-14);
        assert!((s.d_bar() - 0.5 * 2.0 * 0.09).abs() < 1e-15);

        let mut tv = p.clone();
        tv.psi = ProxOracle::Tv1d { lambda: 2.0 };
        let s = SaddleProblem::from_composite(&tv).unwrap();
        assert!((s.objective(&x) - tv.objective(&x)).abs() < 1e-14);

        let mut ball = p.clone();
        ball.psi = ProxOracle::Ball2 { radius: 1.0 };
        let err = SaddleProblem::from_composite(&ball).unwrap_err().to_string();
        assert!(err.contains("l2norm"));
    }

    #[test]
    fn smooth_part_lipschitz() {
        let b = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 2.0]]).unwrap();
        let f = SmoothPart::LeastSquares { b, c: vec![0.0, 0.0] };
        assert_eq!(f.block_lipschitz(&BlockPartition::scalar(2)), vec![1.0, 8.0]);
    }
}
