//! Smooth surrogates `F_γ` of nonsmooth objectives.
//!
//! Every surrogate keeps its problem data immutable and works on an external
//! [`State`]: the iterate together with whatever linear products of it the
//! surrogate caches (`Ax`, `Hx`, ...). Because the cache is linear in `x`,
//! linear combinations of states are again valid states, which is what the
//! accelerated solver relies on.

mod check;
mod dr;
mod fb;
mod moreau;
mod ns;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use check::{surrogate_check, CheckOptions, ScaledLipschitz, SurrogateReport};
pub use dr::DrSurrogate;
pub use fb::FbSurrogate;
pub use moreau::{InnerProxOptions, MoreauSurrogate};
pub use ns::NsSurrogate;

use crate::block::{BlockPartition, LipschitzProfile};
use crate::error::{check_len, Error, Result};
use crate::problem::{QuadraticComposite, SaddleProblem};

/// Iterate plus cached linear products of it.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub x: Vec<f64>,
    pub cache: Vec<f64>,
}

impl State {
    /// `a·s + b·t`
    pub fn combine(a: f64, s: &State, b: f64, t: &State) -> State {
        let mix = |u: &[f64], v: &[f64]| -> Vec<f64> { u.iter().zip(v).map(|(p, q)| a * p + b * q).collect() };
        State { x: mix(&s.x, &t.x), cache: mix(&s.cache, &t.cache) }
    }

    /// `self ← a·self + b·t`
    pub fn blend(&mut self, a: f64, b: f64, t: &State) {
        for (p, q) in self.x.iter_mut().zip(&t.x) {
            *p = a * *p + b * q;
        }
        for (p, q) in self.cache.iter_mut().zip(&t.cache) {
            *p = a * *p + b * q;
        }
    }
}

pub trait SmoothSurrogate: Send + Sync {
    fn name(&self) -> &'static str;

    fn gamma(&self) -> f64;

    fn partition(&self) -> &BlockPartition;

    /// `L_i(F_γ)` for every block.
    fn coord_lipschitz(&self) -> &[f64];

    /// Gap constant `D` of the sandwich inequality.
    fn gap(&self) -> f64;

    /// Builds the cached products for `x` from scratch.
    fn state(&self, x: &[f64]) -> Result<State>;

    /// Updates the cached products for `x^(i) += h`.
    fn cache_step(&self, cache: &mut [f64], i: usize, h: &[f64]);

    fn value(&self, s: &State) -> Result<f64>;

    fn coord_grad(&self, s: &State, i: usize) -> Result<Vec<f64>>;

    fn full_grad(&self, s: &State) -> Result<Vec<f64>>;

    fn map_b(&self, s: &State) -> Result<Vec<f64>>;

    fn map_c(&self, s: &State) -> Result<Vec<f64>>;

    /// The original nonsmooth objective `F`.
    fn objective(&self, x: &[f64]) -> f64;

    /// True when gradients come from an iterative inner prox solve.
    fn inexact(&self) -> bool {
        false
    }

    fn apply_step(&self, s: &mut State, i: usize, h: &[f64]) {
        let r = self.partition().range(i);
        for (xi, hi) in s.x[r].iter_mut().zip(h) {
            *xi += hi;
        }
        self.cache_step(&mut s.cache, i, h);
    }

    fn profile(&self, alpha: f64) -> Result<LipschitzProfile> {
        LipschitzProfile::new(self.coord_lipschitz().to_vec(), alpha)
    }

    fn value_at(&self, x: &[f64]) -> Result<f64> {
        self.value(&self.state(x)?)
    }

    fn grad_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.full_grad(&self.state(x)?)
    }
}

pub(crate) fn check_state_dim(partition: &BlockPartition, x: &[f64]) -> Result<()> {
    check_len(partition.dim(), x.len())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingKind {
    Moreau,
    Fb,
    Dr,
    Ns,
}

impl SmoothingKind {
    pub const ALL: [SmoothingKind; 4] = [SmoothingKind::Moreau, SmoothingKind::Fb, SmoothingKind::Dr, SmoothingKind::Ns];

    pub fn as_str(self) -> &'static str {
        match self {
            SmoothingKind::Moreau => "moreau",
            SmoothingKind::Fb => "fb",
            SmoothingKind::Dr => "dr",
            SmoothingKind::Ns => "ns",
        }
    }
}

impl fmt::Display for SmoothingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SmoothingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moreau" => Ok(SmoothingKind::Moreau),
            "fb" => Ok(SmoothingKind::Fb),
            "dr" => Ok(SmoothingKind::Dr),
            "ns" => Ok(SmoothingKind::Ns),
            other => Err(Error::config(format!(
                "unknown smoothing {other:?}; valid choices are moreau, fb, dr, ns"
            ))),
        }
    }
}

/// Smoothing parameter, either explicit or by the `ε/(2D̄)` rule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Value(f64),
    Rule { rule: GammaRule, eps: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GammaRule {
    #[serde(rename = "eps_over_2D")]
    EpsOver2D,
}

/// Target accuracy used by the default Nesterov smoothing parameter.
pub const DEFAULT_NS_EPS: f64 = 0.1;

/// Default parameter: `0.5/L` for FB and DR, `1` for Moreau, `ε/(2D̄)` for NS.
pub fn default_gamma(kind: SmoothingKind, problem: &QuadraticComposite, saddle: Option<&SaddleProblem>) -> Result<f64> {
    Ok(match kind {
        SmoothingKind::Moreau => 1.0,
        SmoothingKind::Fb | SmoothingKind::Dr => 0.5 / problem.lipschitz_l,
        SmoothingKind::Ns => {
            let d = match saddle {
                Some(s) => s.d_bar(),
                None => SaddleProblem::from_composite(problem)?.d_bar(),
            };
            DEFAULT_NS_EPS / (2.0 * d)
        }
    })
}

pub fn resolve_gamma(
    spec: Option<GammaSpec>,
    kind: SmoothingKind,
    problem: &QuadraticComposite,
    saddle: Option<&SaddleProblem>,
) -> Result<f64> {
    let gamma = match spec {
        None => default_gamma(kind, problem, saddle)?,
        Some(GammaSpec::Value(g)) => g,
        Some(GammaSpec::Rule { rule: GammaRule::EpsOver2D, eps }) => {
            if kind != SmoothingKind::Ns {
                return Err(Error::config("the eps_over_2D rule applies to ns smoothing only"));
            }
            if !(eps > 0.0) {
                return Err(Error::config("eps must be positive"));
            }
            let d = match saddle {
                Some(s) => s.d_bar(),
                None => SaddleProblem::from_composite(problem)?.d_bar(),
            };
            eps / (2.0 * d)
        }
    };
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::config(format!("gamma must be positive and finite, got {gamma}")));
    }
    Ok(gamma)
}

/// Surrogate of a composite problem. For `ns`, `saddle` overrides the default
/// saddle view derived from `ψ`.
pub fn build_surrogate(
    kind: SmoothingKind,
    problem: &Arc<QuadraticComposite>,
    saddle: Option<&Arc<SaddleProblem>>,
    gamma: f64,
) -> Result<Box<dyn SmoothSurrogate>> {
    Ok(match kind {
        SmoothingKind::Moreau => Box::new(MoreauSurrogate::of_composite(problem.clone(), gamma, InnerProxOptions::default())?),
        SmoothingKind::Fb => Box::new(FbSurrogate::new(problem.clone(), gamma)?),
        SmoothingKind::Dr => Box::new(DrSurrogate::new(problem.clone(), gamma)?),
        SmoothingKind::Ns => {
            let sp = match saddle {
                Some(s) => s.clone(),
                None => Arc::new(SaddleProblem::from_composite(problem)?),
            };
            Box::new(NsSurrogate::new(sp, gamma)?)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_parsing() {
        for k in SmoothingKind::ALL {
            assert_eq!(k.as_str().parse::<SmoothingKind>().unwrap(), k);
        }
        let e = "huber".parse::<SmoothingKind>().unwrap_err().to_string();
        assert!(e.contains("moreau, fb, dr, ns"));
    }

    #[test]
    fn gamma_spec_json() {
        let v: GammaSpec = serde_json::from_str("0.25").unwrap();
        assert_eq!(v, GammaSpec::Value(0.25));
        let r: GammaSpec = serde_json::from_str(r#"{"rule":"eps_over_2D","eps":0.01}"#).unwrap();
        assert_eq!(r, GammaSpec::Rule { rule: GammaRule::EpsOver2D, eps: 0.01 });
    }

    #[test]
    fn state_combination_is_linear() {
        let s = State { x: vec![1.0, 2.0], cache: vec![3.0] };
        let t = State { x: vec![-1.0, 0.0], cache: vec![1.0] };
        let c = State::combine(0.5, &s, 2.0, &t);
        assert_eq!(c, State { x: vec![-1.5, 1.0], cache: vec![3.5] });
        let mut d = s.clone();
        d.blend(0.5, 2.0, &t);
        assert_eq!(d, c);
    }
}
