use serde::Deserialize;
use serde_json::Value;

use crate::block::BlockPartition;
use crate::error::{check_len, Error, Result};
use crate::linalg::{dot, norm2, norm2_sq, spectral_norm, sym_max_eigenvalue, Matrix};

/// Convex objective with block gradients and constants `L_i` relative to a
/// kernel, in the form consumed by [`super::rrcd_run`].
pub trait RelativeObjective: Send + Sync {
    fn partition(&self) -> &BlockPartition;

    fn relative_constants(&self) -> &[f64];

    fn value(&self, x: &[f64]) -> f64;

    fn grad(&self, x: &[f64]) -> Vec<f64>;

    fn cache(&self, x: &[f64]) -> Vec<f64>;

    fn cache_step(&self, cache: &mut [f64], i: usize, d: &[f64]);

    fn block_grad(&self, x: &[f64], cache: &[f64], i: usize) -> Vec<f64>;
}

/// `F(x) = ½⟨Qx, x⟩ + ⟨q, x⟩ + ¼‖Ex‖⁴ + ¼‖Ax − b‖⁴_ℓ4`, relatively smooth
/// along blocks with respect to `¼‖x‖⁴ + ½‖x‖²`.
#[derive(Clone, Debug)]
pub struct QuarticProblem {
    e: Matrix,
    a: Matrix,
    b: Vec<f64>,
    q: Matrix,
    q_lin: Vec<f64>,
    partition: BlockPartition,
    lf: Vec<f64>,
    l: Vec<f64>,
}

/// `L_i(f) + 3‖AU_i‖²(‖b‖ + ‖A‖)² + 3‖EU_i‖²‖E‖²`, spectral norms throughout.
pub fn quartic_lipschitz(e: &Matrix, a: &Matrix, b: &[f64], lf: &[f64], partition: &BlockPartition) -> Result<Vec<f64>> {
    check_len(partition.count(), lf.len())?;
    check_len(partition.dim(), e.ncols())?;
    check_len(partition.dim(), a.ncols())?;
    check_len(a.nrows(), b.len())?;
    let e_norm = e.spectral_norm();
    let a_norm = a.spectral_norm();
    let shift = norm2(b) + a_norm;
    Ok((0..partition.count())
        .map(|i| {
            let r = partition.range(i);
            let ai = spectral_norm(&a.column_block(r.start, r.len()));
            let ei = spectral_norm(&e.column_block(r.start, r.len()));
            lf[i] + 3.0 * ai * ai * shift * shift + 3.0 * ei * ei * e_norm * e_norm
        })
        .collect())
}

impl QuarticProblem {
    pub fn new(e: Matrix, a: Matrix, b: Vec<f64>, q: Matrix, q_lin: Vec<f64>, partition: BlockPartition) -> Result<Self> {
        let n = partition.dim();
        check_len(n, e.ncols())?;
        check_len(n, a.ncols())?;
        check_len(a.nrows(), b.len())?;
        check_len(n, q.nrows())?;
        check_len(n, q.ncols())?;
        check_len(n, q_lin.len())?;
        if !q.is_symmetric(1e-12) {
            return Err(Error::arg("quadratic part must be symmetric"));
        }
        let dense = q.to_dense();
        let lf: Vec<f64> = (0..partition.count())
            .map(|i| {
                let r = partition.range(i);
                sym_max_eigenvalue(&dense.view((r.start, r.start), (r.len(), r.len())).into_owned()).max(0.0)
            })
            .collect();
        let l = quartic_lipschitz(&e, &a, &b, &lf, &partition)?;
        Ok(QuarticProblem { e, a, b, q, q_lin, partition, lf, l })
    }

    /// Replaces the relative constants, e.g. by sharper problem-specific ones.
    pub fn with_constants(mut self, l: Vec<f64>) -> Result<Self> {
        check_len(self.partition.count(), l.len())?;
        if l.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::arg("relative constants must be positive and finite"));
        }
        self.l = l;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.partition.dim()
    }

    pub fn smooth_constants(&self) -> &[f64] {
        &self.lf
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Smooth {
            #[serde(rename = "A")]
            a: Matrix,
            b: Vec<f64>,
        }
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            kind: String,
            #[serde(rename = "E")]
            e: Matrix,
            #[serde(rename = "A")]
            a: Matrix,
            b: Vec<f64>,
            f: Option<Smooth>,
            blocks: Option<Vec<usize>>,
        }
        let doc: Doc = serde_json::from_value(v.clone())?;
        if doc.kind != "quartic" {
            return Err(Error::config(format!("expected kind \"quartic\", got {:?}", doc.kind)));
        }
        let n = doc.e.ncols();
        let partition = match doc.blocks {
            Some(s) => BlockPartition::new(s)?,
            None => BlockPartition::scalar(n),
        };
        let (q, q_lin) = match doc.f {
            Some(f) => (f.a, f.b),
            None => (Matrix::zeros(n, n), vec![0.0; n]),
        };
        Self::new(doc.e, doc.a, doc.b, q, q_lin, partition)
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "kind": "quartic",
            "E": self.e,
            "A": self.a,
            "b": self.b,
            "f": {"A": self.q, "b": self.q_lin},
            "blocks": self.partition.sizes(),
        })
    }

    fn split<'c>(&self, cache: &'c [f64]) -> (&'c [f64], &'c [f64], &'c [f64]) {
        let me = self.e.nrows();
        let ma = self.a.nrows();
        (&cache[..me], &cache[me..me + ma], &cache[me + ma..])
    }
}

impl RelativeObjective for QuarticProblem {
    fn partition(&self) -> &BlockPartition {
        &self.partition
    }

    fn relative_constants(&self) -> &[f64] {
        &self.l
    }

    fn value(&self, x: &[f64]) -> f64 {
        let ex = norm2_sq(&self.e.mul_vec(x));
        let r: Vec<f64> = self.a.mul_vec(x).iter().zip(&self.b).map(|(u, v)| u - v).collect();
        let r4: f64 = r.iter().map(|v| v.powi(4)).sum();
        0.5 * dot(x, &self.q.mul_vec(x)) + dot(&self.q_lin, x) + 0.25 * ex * ex + 0.25 * r4
    }

    fn grad(&self, x: &[f64]) -> Vec<f64> {
        let ex = self.e.mul_vec(x);
        let s = norm2_sq(&ex);
        let r3: Vec<f64> = self.a.mul_vec(x).iter().zip(&self.b).map(|(u, v)| (u - v).powi(3)).collect();
        let mut g = self.q.mul_vec(x);
        let ge = self.e.tr_mul_vec(&ex);
        let ga = self.a.tr_mul_vec(&r3);
        for j in 0..g.len() {
            g[j] += self.q_lin[j] + s * ge[j] + ga[j];
        }
        g
    }

    fn cache(&self, x: &[f64]) -> Vec<f64> {
        let mut c = self.e.mul_vec(x);
        c.extend(self.a.mul_vec(x).iter().zip(&self.b).map(|(u, v)| u - v));
        c.extend(self.q.mul_vec(x));
        c
    }

    fn cache_step(&self, cache: &mut [f64], i: usize, d: &[f64]) {
        let me = self.e.nrows();
        let ma = self.a.nrows();
        let (ce, rest) = cache.split_at_mut(me);
        let (ca, cq) = rest.split_at_mut(ma);
        for (j, dj) in self.partition.range(i).zip(d) {
            self.e.col_axpy(j, *dj, ce);
            self.a.col_axpy(j, *dj, ca);
            self.q.col_axpy(j, *dj, cq);
        }
    }

    fn block_grad(&self, _x: &[f64], cache: &[f64], i: usize) -> Vec<f64> {
        let (ex, r, qx) = self.split(cache);
        let s = norm2_sq(ex);
        let r3: Vec<f64> = r.iter().map(|v| v * v * v).collect();
        self.partition
            .range(i)
            .map(|j| qx[j] + self.q_lin[j] + s * self.e.col_dot(j, ex) + self.a.col_dot(j, &r3))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Pcg64;

    fn scalar(v: f64) -> Matrix {
        Matrix::from_rows(&[vec![v]]).unwrap()
    }

    #[test]
    fn lipschitz_examples() {
        let p = BlockPartition::scalar(1);
        assert_eq!(quartic_lipschitz(&scalar(0.0), &scalar(1.0), &[0.0], &[0.0], &p).unwrap(), vec![3.0]);
        assert_eq!(quartic_lipschitz(&scalar(1.0), &scalar(0.0), &[0.0], &[0.0], &p).unwrap(), vec![3.0]);
        assert_eq!(quartic_lipschitz(&scalar(0.0), &scalar(0.0), &[0.0], &[5.0], &p).unwrap(), vec![5.0]);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = Pcg64::seed_from(8);
        let n = 5;
        let rand = |rng: &mut Pcg64, r: usize, c: usize| {
            Matrix::from_rows(&(0..r).map(|_| rng.normal_vec(c)).collect::<Vec<_>>()).unwrap()
        };
        let e = rand(&mut rng, 3, n);
        let a = rand(&mut rng, 4, n);
        let b = rng.normal_vec(4);
        let q = Matrix::Dense(e.transpose_times_self());
        let ql = rng.normal_vec(n);
        let p = QuarticProblem::new(e, a, b, q, ql, BlockPartition::new(vec![2, 3]).unwrap()).unwrap();
        let x = rng.normal_vec(n);
        let g = p.grad(&x);
        let c = p.cache(&x);
        let mut gb = p.block_grad(&x, &c, 0);
        gb.extend(p.block_grad(&x, &c, 1));
        for j in 0..n {
            let h = 1e-6;
            let mut xp = x.clone();
            xp[j] += h;
            let mut xm = x.clone();
            xm[j] -= h;
            let fd = (p.value(&xp) - p.value(&xm)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-5 * (1.0 + g[j].abs()));
            assert!((gb[j] - g[j]).abs() < 1e-10 * (1.0 + g[j].abs()));
        }
        let mut c2 = c.clone();
        p.cache_step(&mut c2, 1, &[0.5, -1.0, 2.0]);
        let mut y = x.clone();
        y[2] += 0.5;
        y[3] -= 1.0;
        y[4] += 2.0;
        let fresh = p.cache(&y);
        for (u, v) in c2.iter().zip(&fresh) {
            assert!((u - v).abs() < 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn json_round_trip() {
        let p = QuarticProblem::new(scalar(1.0), scalar(2.0), vec![1.0], scalar(1.0), vec![0.5], BlockPartition::scalar(1)).unwrap();
        let q = QuarticProblem::from_json(&p.to_json()).unwrap();
        assert_eq!(q.relative_constants(), p.relative_constants());
        assert_eq!(q.value(&[0.7]), p.value(&[0.7]));
        let mut bad = p.to_json();
        bad["kind"] = "quadratic".into();
        assert!(QuarticProblem::from_json(&bad).is_err());
    }
}
