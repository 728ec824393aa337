//! Empirical verification of the surrogate contract on sampled points.

use super::{SmoothSurrogate, State};
use crate::block::BlockPartition;
use crate::error::Result;
use crate::linalg::{dot, norm2};
use crate::rng::Pcg64;

#[derive(Clone, Debug)]
pub struct CheckOptions {
    pub trials: usize,
    pub gradient_trials: usize,
    pub lipschitz_trials: usize,
    pub cache_steps: usize,
    pub seed: u64,
    /// Points are drawn as `center + scale·N(0, I)`.
    pub scale: f64,
    pub center: Option<Vec<f64>>,
    pub fd_step: f64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions {
            trials: 200,
            gradient_trials: 100,
            lipschitz_trials: 1000,
            cache_steps: 1000,
            seed: 0,
            scale: 1.0,
            center: None,
            fd_step: 1e-6,
        }
    }
}

/// Largest normalized violation seen for each invariant family.
#[derive(Clone, Debug, Default, serde::Serialize)]
pub struct SurrogateReport {
    pub sandwich: f64,
    pub gradient: f64,
    pub lipschitz: f64,
    pub cocoercivity: f64,
    pub convexity: f64,
    pub cache: f64,
}

impl SurrogateReport {
    pub const SANDWICH_TOL: f64 = 1e-8;
    pub const GRADIENT_TOL: f64 = 1e-5;
    pub const LIPSCHITZ_TOL: f64 = 1e-8;
    pub const CONVEXITY_TOL: f64 = 1e-10;
    pub const CACHE_TOL: f64 = 1e-9;

    pub fn passed(&self) -> bool {
        self.sandwich <= Self::SANDWICH_TOL
            && self.gradient <= Self::GRADIENT_TOL
            && self.lipschitz <= Self::LIPSCHITZ_TOL
            && self.cocoercivity <= Self::LIPSCHITZ_TOL
            && self.convexity <= Self::CONVEXITY_TOL
            && self.cache <= Self::CACHE_TOL
    }
}

fn sample(rng: &mut Pcg64, n: usize, opts: &CheckOptions) -> Vec<f64> {
    let mut x: Vec<f64> = rng.normal_vec(n).into_iter().map(|v| v * opts.scale).collect();
    if let Some(c) = &opts.center {
        x.iter_mut().zip(c).for_each(|(a, b)| *a += b);
    }
    x
}

/// `F(B(x)) − γD ≤ F_γ(x) ≤ F(C(x))`, normalized by `1 + |F_γ(x)|`.
pub fn sandwich_violation<S: SmoothSurrogate + ?Sized>(s: &S, objective: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    let st = s.state(x)?;
    let fg = s.value(&st)?;
    let lower = objective(&s.map_b(&st)?) - s.gamma() * s.gap();
    let upper = objective(&s.map_c(&st)?);
    let v = (lower - fg).max(fg - upper).max(0.0);
    Ok(if v.is_nan() { f64::INFINITY } else { v / (1.0 + fg.abs()) })
}

/// `|∂_j F_γ − central difference| / max(1, |∂_j F_γ|)` at coordinate `j`.
pub fn gradient_error<S: SmoothSurrogate + ?Sized>(s: &S, x: &[f64], j: usize, step: f64) -> Result<f64> {
    let part = s.partition();
    let i = part.block_of(j);
    let st = s.state(x)?;
    let g = s.coord_grad(&st, i)?[j - part.range(i).start];
    let h = step * x[j].abs().max(1.0);
    let mut xp = x.to_vec();
    xp[j] += h;
    let mut xm = x.to_vec();
    xm[j] -= h;
    let fd = (s.value_at(&xp)? - s.value_at(&xm)?) / (2.0 * h);
    Ok((fd - g).abs() / g.abs().max(1.0))
}

/// Block Lipschitz and cocoercivity violations for one `(x, i, h)`.
pub fn lipschitz_violation<S: SmoothSurrogate + ?Sized>(s: &S, x: &[f64], i: usize, h: &[f64]) -> Result<(f64, f64)> {
    let li = s.coord_lipschitz()[i];
    let st = s.state(x)?;
    let g0 = s.coord_grad(&st, i)?;
    let mut st1 = st.clone();
    s.apply_step(&mut st1, i, h);
    let st1 = s.state(&st1.x)?;
    let g1 = s.coord_grad(&st1, i)?;
    let dg: Vec<f64> = g1.iter().zip(&g0).map(|(a, b)| a - b).collect();
    let nh = norm2(h);
    let ndg = norm2(&dg);
    let lip = (ndg - li * nh).max(0.0) / (li * nh);
    let coco = (ndg * ndg / li - dot(&dg, h)).max(0.0) / (li * nh * nh);
    Ok((lip, coco))
}

pub fn surrogate_check<S: SmoothSurrogate + ?Sized>(
    s: &S,
    objective: &dyn Fn(&[f64]) -> f64,
    opts: &CheckOptions,
) -> Result<SurrogateReport> {
    let part: &BlockPartition = s.partition();
    let n = part.dim();
    let mut rng = Pcg64::seed_from(opts.seed);
    let mut rep = SurrogateReport::default();

    for _ in 0..opts.trials {
        let x = sample(&mut rng, n, opts);
        rep.sandwich = rep.sandwich.max(sandwich_violation(s, objective, &x)?);

        let y = sample(&mut rng, n, opts);
        let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
        let (fx, fy, fm) = (s.value_at(&x)?, s.value_at(&y)?, s.value_at(&mid)?);
        let conv = (fm - 0.5 * (fx + fy)).max(0.0) / (1.0 + fx.abs().max(fy.abs()));
        rep.convexity = rep.convexity.max(conv);
    }

    for _ in 0..opts.gradient_trials {
        let x = sample(&mut rng, n, opts);
        let j = rng.below(n);
        rep.gradient = rep.gradient.max(gradient_error(s, &x, j, opts.fd_step)?);
    }

    for _ in 0..opts.lipschitz_trials {
        let x = sample(&mut rng, n, opts);
        let i = rng.below(part.count());
        let mag = 10f64.powf(rng.uniform(-2.0, 1.0)) * opts.scale;
        let h: Vec<f64> = rng.normal_vec(part.size(i)).into_iter().map(|v| v * mag).collect();
        let (lip, coco) = lipschitz_violation(s, &x, i, &h)?;
        rep.lipschitz = rep.lipschitz.max(lip);
        rep.cocoercivity = rep.cocoercivity.max(coco);
    }

    if opts.cache_steps > 0 {
        let mut st = s.state(&sample(&mut rng, n, opts))?;
        for _ in 0..opts.cache_steps {
            let i = rng.below(part.count());
            let h: Vec<f64> = rng.normal_vec(part.size(i)).into_iter().map(|v| v * opts.scale).collect();
            s.apply_step(&mut st, i, &h);
        }
        let fresh = s.state(&st.x)?;
        rep.cache = cache_drift(&st, &fresh);
    }
    Ok(rep)
}

/// Relative difference of incrementally maintained and rebuilt caches.
pub fn cache_drift(incremental: &State, fresh: &State) -> f64 {
    let diff: Vec<f64> = incremental.cache.iter().zip(&fresh.cache).map(|(a, b)| a - b).collect();
    norm2(&diff) / (1.0 + norm2(&fresh.cache))
}

/// Delegating surrogate with replaced Lipschitz constants, for mutation tests.
pub struct ScaledLipschitz<'a, S: SmoothSurrogate + ?Sized> {
    inner: &'a S,
    lipschitz: Vec<f64>,
}

impl<'a, S: SmoothSurrogate + ?Sized> ScaledLipschitz<'a, S> {
    pub fn new(inner: &'a S, factor: f64) -> Self {
        let lipschitz = inner.coord_lipschitz().iter().map(|l| l * factor).collect();
        ScaledLipschitz { inner, lipschitz }
    }
}

impl<S: SmoothSurrogate + ?Sized> SmoothSurrogate for ScaledLipschitz<'_, S> {
    fn name(&self) -> &'static str {
        self.inner.name()
    }
    fn gamma(&self) -> f64 {
        self.inner.gamma()
    }
    fn partition(&self) -> &BlockPartition {
        self.inner.partition()
    }
    fn coord_lipschitz(&self) -> &[f64] {
        &self.lipschitz
    }
    fn gap(&self) -> f64 {
        self.inner.gap()
    }
    fn state(&self, x: &[f64]) -> Result<State> {
        self.inner.state(x)
    }
    fn cache_step(&self, cache: &mut [f64], i: usize, h: &[f64]) {
        self.inner.cache_step(cache, i, h)
    }
    fn value(&self, s: &State) -> Result<f64> {
        self.inner.value(s)
    }
    fn coord_grad(&self, s: &State, i: usize) -> Result<Vec<f64>> {
        self.inner.coord_grad(s, i)
    }
    fn full_grad(&self, s: &State) -> Result<Vec<f64>> {
        self.inner.full_grad(s)
    }
    fn map_b(&self, s: &State) -> Result<Vec<f64>> {
        self.inner.map_b(s)
    }
    fn map_c(&self, s: &State) -> Result<Vec<f64>> {
        self.inner.map_c(s)
    }
    fn objective(&self, x: &[f64]) -> f64 {
        self.inner.objective(x)
    }
    fn inexact(&self) -> bool {
        self.inner.inexact()
    }
}
