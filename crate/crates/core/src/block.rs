//! Block structure of the variable space, block-weighted norms and the
//! Lipschitz-weighted block sampler.

use std::ops::Range;

use crate::error::{check_len, Error, Result};
use crate::rng::Pcg64;

/// Decomposition of `0..n` into `N` contiguous index ranges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    n: usize,
}

impl BlockPartition {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::arg("a partition needs at least one block"));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::arg("block sizes must be positive"));
        }
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &s in &sizes {
            offsets.push(acc);
            acc += s;
        }
        Ok(BlockPartition { sizes, offsets, n: acc })
    }

    /// One coordinate per block.
    pub fn scalar(n: usize) -> Self {
        Self::new(vec![1; n]).expect("n >= 1")
    }

    /// A single block holding every coordinate.
    pub fn single(n: usize) -> Self {
        Self::new(vec![n]).expect("n >= 1")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn size(&self, i: usize) -> usize {
        self.sizes[i]
    }

    #[inline]
    pub fn range(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i] + self.sizes[i]
    }

    pub fn is_scalar(&self) -> bool {
        self.sizes.len() == self.n
    }

    /// Block that owns coordinate `j`.
    pub fn block_of(&self, j: usize) -> usize {
        assert!(j < self.n, "coordinate out of range");
        match self.offsets.binary_search(&j) {
            Ok(b) => b,
            Err(b) => b - 1,
        }
    }

    #[inline]
    pub fn gather<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[self.range(i)]
    }

    #[inline]
    pub fn scatter(&self, x: &mut [f64], i: usize, v: &[f64]) {
        x[self.range(i)].copy_from_slice(v);
    }

    pub fn block_sq_norms(&self, x: &[f64]) -> Vec<f64> {
        (0..self.count())
            .map(|i| self.gather(x, i).iter().map(|v| v * v).sum())
            .collect()
    }
}

/// Per-block Lipschitz constants together with the sampling exponent.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzProfile {
    values: Vec<f64>,
    alpha: f64,
}

impl LipschitzProfile {
    pub fn new(values: Vec<f64>, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::arg(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if values.is_empty() {
            return Err(Error::arg("empty Lipschitz profile"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::arg(format!("Lipschitz constants must be positive and finite, got {v}")));
        }
        Ok(LipschitzProfile { values, alpha })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.values.clone(), alpha)
    }

    pub fn l_max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }

    /// `Σ L_i^α`
    pub fn s_alpha(&self) -> f64 {
        self.values.iter().map(|l| l.powf(self.alpha)).sum()
    }

    /// `L_i^α / S_α`
    pub fn probabilities(&self) -> Vec<f64> {
        let s = self.s_alpha();
        self.values.iter().map(|l| l.powf(self.alpha) / s).collect()
    }
}

fn weighted_sq(x: &[f64], values: &[f64], exponent: f64, partition: &BlockPartition) -> Result<f64> {
    check_len(partition.dim(), x.len())?;
    check_len(partition.count(), values.len())?;
    Ok(partition
        .block_sq_norms(x)
        .iter()
        .zip(values)
        .map(|(s, l)| l.powf(exponent) * s)
        .sum())
}

/// `sqrt(Σ L_i^α ‖x^(i)‖²)`
pub fn weighted_norm(x: &[f64], profile: &LipschitzProfile, partition: &BlockPartition) -> Result<f64> {
    Ok(weighted_sq(x, profile.values(), profile.alpha(), partition)?.sqrt())
}

/// `sqrt(Σ L_i^{-α} ‖g^(i)‖²)`
pub fn dual_weighted_norm(g: &[f64], profile: &LipschitzProfile, partition: &BlockPartition) -> Result<f64> {
    Ok(weighted_sq(g, profile.values(), -profile.alpha(), partition)?.sqrt())
}

/// Inverse-CDF sampler over `p_i = L_i^α / S_α`.
#[derive(Clone, Debug)]
pub struct BlockSampler {
    cumulative: Vec<f64>,
    probabilities: Vec<f64>,
}

impl BlockSampler {
    pub fn new(profile: &LipschitzProfile) -> Self {
        let probabilities = profile.probabilities();
        let mut acc = 0.0;
        let cumulative = probabilities
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        BlockSampler { cumulative, probabilities }
    }

    pub fn uniform(n_blocks: usize) -> Self {
        let profile = LipschitzProfile::new(vec![1.0; n_blocks], 0.0).expect("valid");
        Self::new(&profile)
    }

    pub fn probability(&self, i: usize) -> f64 {
        self.probabilities[i]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    #[inline]
    pub fn draw(&self, rng: &mut Pcg64) -> usize {
        let total = *self.cumulative.last().unwrap();
        let u = rng.next_f64() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1)
    }
}
