//! Dense and compressed-sparse-column matrices with the handful of kernels the
//! solvers need: products, column updates and small spectral computations.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    norm2_sq(a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Compressed sparse column storage.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    pub fn new(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if indptr.len() != ncols + 1 || indptr[0] != 0 {
            return Err(Error::arg("csc indptr must have ncols+1 entries starting at 0"));
        }
        if indices.len() != values.len() || *indptr.last().unwrap() != values.len() {
            return Err(Error::arg("csc indices/values length mismatch"));
        }
        for j in 0..ncols {
            if indptr[j] > indptr[j + 1] {
                return Err(Error::arg("csc indptr must be nondecreasing"));
            }
            let col = &indices[indptr[j]..indptr[j + 1]];
            if col.iter().any(|&r| r >= nrows) {
                return Err(Error::arg("csc row index out of range"));
            }
            if col.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::arg("csc row indices must be strictly increasing per column"));
            }
        }
        Ok(CscMatrix { nrows, ncols, indptr, indices, values })
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, mut t: Vec<(usize, usize, f64)>) -> Result<Self> {
        if t.iter().any(|&(r, c, _)| r >= nrows || c >= ncols) {
            return Err(Error::arg("triplet index out of range"));
        }
        t.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
        let mut indptr = vec![0usize; ncols + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(r);
            values.push(v);
            indptr[c + 1] += 1;
            last = Some((r, c));
        }
        for j in 0..ncols {
            indptr[j + 1] += indptr[j];
        }
        Self::new(nrows, ncols, indptr, indices, values)
    }

    pub fn column(&self, j: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.indptr[j], self.indptr[j + 1]);
        (&self.indices[s..e], &self.values[s..e])
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            let (rows, vals) = self.column(j);
            for (&r, &v) in rows.iter().zip(vals) {
                m[(r, j)] = v;
            }
        }
        m
    }
}

#[derive(Clone, Debug)]
pub enum Matrix {
    Dense(DMatrix<f64>),
    Csc(CscMatrix),
}

impl Matrix {
    pub fn identity(n: usize) -> Self {
        Matrix::Dense(DMatrix::identity(n, n))
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix::Dense(DMatrix::zeros(nrows, ncols))
    }

    /// Row-major nested rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::arg("ragged dense matrix rows"));
        }
        Ok(Matrix::Dense(DMatrix::from_fn(m, n, |i, j| rows[i][j])))
    }

    pub fn nrows(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.nrows(),
            Matrix::Csc(m) => m.nrows,
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            Matrix::Dense(m) => m.ncols(),
            Matrix::Csc(m) => m.ncols,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Matrix::Dense(m) => m.clone(),
            Matrix::Csc(m) => m.to_dense(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self {
            Matrix::Dense(m) => m[(i, j)],
            Matrix::Csc(m) => {
                let (rows, vals) = m.column(j);
                rows.binary_search(&i).map_or(0.0, |k| vals[k])
            }
        }
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.ncols());
        let mut y = vec![0.0; self.nrows()];
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                self.col_axpy(j, xj, &mut y);
            }
        }
        y
    }

    /// `Aᵀ y`
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.nrows());
        (0..self.ncols()).map(|j| self.col_dot(j, y)).collect()
    }

    /// `y += alpha * A[:, j]`
    #[inline]
    pub fn col_axpy(&self, j: usize, alpha: f64, y: &mut [f64]) {
        match self {
            Matrix::Dense(m) => {
                let r = m.nrows();
                axpy(alpha, &m.as_slice()[j * r..(j + 1) * r], y);
            }
            Matrix::Csc(m) => {
                let (rows, vals) = m.column(j);
                for (&i, &v) in rows.iter().zip(vals) {
                    y[i] += alpha * v;
                }
            }
        }
    }

    /// `A[:, j] · v`
    #[inline]
    pub fn col_dot(&self, j: usize, v: &[f64]) -> f64 {
        match self {
            Matrix::Dense(m) => {
                let r = m.nrows();
                dot(&m.as_slice()[j * r..(j + 1) * r], v)
            }
            Matrix::Csc(m) => {
                let (rows, vals) = m.column(j);
                rows.iter().zip(vals).map(|(&i, &a)| a * v[i]).sum()
            }
        }
    }

    pub fn col_sq_norm(&self, j: usize) -> f64 {
        match self {
            Matrix::Dense(m) => {
                let r = m.nrows();
                norm2_sq(&m.as_slice()[j * r..(j + 1) * r])
            }
            Matrix::Csc(m) => norm2_sq(m.column(j).1),
        }
    }

    pub fn row_sq_norms(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows()];
        match self {
            Matrix::Dense(m) => {
                for j in 0..m.ncols() {
                    for i in 0..m.nrows() {
                        out[i] += m[(i, j)] * m[(i, j)];
                    }
                }
            }
            Matrix::Csc(m) => {
                for (&i, &v) in m.indices.iter().zip(&m.values) {
                    out[i] += v * v;
                }
            }
        }
        out
    }

    /// Dense copy of the column range `start..start+len`.
    pub fn column_block(&self, start: usize, len: usize) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows(), len);
        for c in 0..len {
            let mut col = vec![0.0; self.nrows()];
            self.col_axpy(start + c, 1.0, &mut col);
            out.column_mut(c).copy_from_slice(&col);
        }
        out
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.nrows() != self.ncols() {
            return false;
        }
        let d = self.to_dense();
        let scale = d.amax().max(f64::MIN_POSITIVE);
        let n = d.nrows();
        (0..n).all(|i| (0..i).all(|j| (d[(i, j)] - d[(j, i)]).abs() <= rel_tol * scale))
    }

    pub fn is_diagonal(&self) -> bool {
        if self.nrows() != self.ncols() {
            return false;
        }
        match self {
            Matrix::Dense(m) => {
                (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| i == j || m[(i, j)] == 0.0))
            }
            Matrix::Csc(m) => (0..m.ncols).all(|j| {
                let (rows, vals) = m.column(j);
                rows.iter().zip(vals).all(|(&i, &v)| i == j || v == 0.0)
            }),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows().min(self.ncols())).map(|i| self.get(i, i)).collect()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(&self.to_dense())
    }

    pub fn transpose_times_self(&self) -> DMatrix<f64> {
        let d = self.to_dense();
        d.transpose() * &d
    }

    pub fn scaled(&self, s: f64) -> Matrix {
        match self {
            Matrix::Dense(m) => Matrix::Dense(m * s),
            Matrix::Csc(m) => {
                let mut c = m.clone();
                c.values.iter_mut().for_each(|v| *v *= s);
                Matrix::Csc(c)
            }
        }
    }

    pub fn check_vec(&self, x: &[f64]) -> Result<()> {
        check_len(self.ncols(), x.len())
    }
}

/// Largest singular value of a dense matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows() == 1 || m.ncols() == 1 {
        return m.norm();
    }
    m.clone().svd(false, false).singular_values.max()
}

/// Largest absolute eigenvalue of a symmetric matrix.
pub fn sym_spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.nrows() == 1 {
        return m[(0, 0)].abs();
    }
    SymmetricEigen::new(m.clone()).eigenvalues.amax()
}

pub fn sym_max_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    SymmetricEigen::new(m.clone()).eigenvalues.max()
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "lowercase")]
enum MatrixRepr {
    Dense {
        rows: usize,
        cols: usize,
        data: Vec<Vec<f64>>,
    },
    Csc {
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    },
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self {
            Matrix::Dense(m) => MatrixRepr::Dense {
                rows: m.nrows(),
                cols: m.ncols(),
                data: (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect(),
            },
            Matrix::Csc(m) => MatrixRepr::Csc {
                rows: m.nrows,
                cols: m.ncols,
                indptr: m.indptr.clone(),
                indices: m.indices.clone(),
                values: m.values.clone(),
            },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        match MatrixRepr::deserialize(d)? {
            MatrixRepr::Dense { rows, cols, data } => {
                if data.len() != rows || data.iter().any(|r| r.len() != cols) {
                    return Err(D::Error::custom("dense data does not match rows/cols"));
                }
                Ok(Matrix::Dense(DMatrix::from_fn(rows, cols, |i, j| data[i][j])))
            }
            MatrixRepr::Csc { rows, cols, indptr, indices, values } => {
                CscMatrix::new(rows, cols, indptr, indices, values)
                    .map(Matrix::Csc)
                    .map_err(D::Error::custom)
            }
        }
    }
}
