//! Proximal operators behind one [`ProxOracle`] type.

mod brute;
mod ops;
mod tv;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use brute::{brute_force_prox, brute_force_prox_affine};
pub use ops::{
    euclidean_norm_optimality, project_hyperplane_box, project_l1_ball, project_l2_ball,
    project_simplex, prox_euclidean_norm, prox_group_norm, prox_power_norm,
    prox_power_norm_weighted, soft_threshold, validate_groups, AffineSet,
};
pub use tv::{prox_tv_1d, total_variation};

use crate::error::{check_len, Error, Result};
use crate::linalg::{dist2, norm2, Matrix};

/// Relative slack when deciding membership for indicator functions.
const FEAS_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub enum ProxOracle {
    /// `ψ = 0`
    Zero,
    /// `λ‖x‖₂`
    L2Norm { lambda: f64 },
    /// `λ‖x‖₁`
    L1Norm { lambda: f64 },
    /// `λ Σ_s ‖x_s‖₂` over a partition of the coordinates
    Group { lambda: f64, groups: Vec<Vec<usize>> },
    /// indicator of `{‖x‖₂ ≤ r}`
    Ball2 { radius: f64 },
    /// indicator of `{‖x − c‖₁ ≤ r}`; empty `center` is the origin
    Ball1 { radius: f64, center: Vec<f64> },
    /// indicator of the probability simplex
    Simplex,
    /// indicator of `{aᵀx = b, lower ≤ x ≤ upper}`
    HyperBox { a: Vec<f64>, b: f64, lower: Vec<f64>, upper: Vec<f64> },
    /// indicator of `{Ax = b}`
    Affine(AffineSet),
    /// `λ Σ |x_i − x_{i+1}|`
    Tv1d { lambda: f64 },
    /// `w ‖x‖₂^{r+2}`
    Power { r: f64, weight: f64 },
}

impl ProxOracle {
    pub fn kind(&self) -> &'static str {
        match self {
            ProxOracle::Zero => "zero",
            ProxOracle::L2Norm { .. } => "l2norm",
            ProxOracle::L1Norm { .. } => "l1norm",
            ProxOracle::Group { .. } => "group",
            ProxOracle::Ball2 { .. } => "ball2",
            ProxOracle::Ball1 { .. } => "ball1",
            ProxOracle::Simplex => "simplex",
            ProxOracle::HyperBox { .. } => "hyperbox",
            ProxOracle::Affine(_) => "affine",
            ProxOracle::Tv1d { .. } => "tv1d",
            ProxOracle::Power { .. } => "power",
        }
    }

    pub const KINDS: [&'static str; 11] = [
        "zero", "l2norm", "l1norm", "group", "ball2", "ball1", "simplex", "hyperbox", "affine",
        "tv1d", "power",
    ];

    pub fn is_indicator(&self) -> bool {
        matches!(
            self,
            ProxOracle::Ball2 { .. }
                | ProxOracle::Ball1 { .. }
                | ProxOracle::Simplex
                | ProxOracle::HyperBox { .. }
                | ProxOracle::Affine(_)
        )
    }

    /// Check parameters against the ambient dimension.
    pub fn validate(&self, n: usize) -> Result<()> {
        let nonneg = |v: f64, what: &str| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::arg(format!("{what} must be finite and nonnegative")))
            }
        };
        match self {
            ProxOracle::Zero | ProxOracle::Simplex => Ok(()),
            ProxOracle::L2Norm { lambda } | ProxOracle::L1Norm { lambda } | ProxOracle::Tv1d { lambda } => {
                nonneg(*lambda, "lambda")
            }
            ProxOracle::Group { lambda, groups } => {
                nonneg(*lambda, "lambda")?;
                validate_groups(groups, Some(n))
            }
            ProxOracle::Ball2 { radius } => project_l2_ball(*radius, &[]).map(|_| ()),
            ProxOracle::Ball1 { radius, center } => {
                if !(*radius > 0.0) {
                    return Err(Error::arg("ball radius must be positive"));
                }
                if center.is_empty() {
                    Ok(())
                } else {
                    check_len(n, center.len())
                }
            }
            ProxOracle::HyperBox { a, lower, upper, .. } => {
                check_len(n, a.len())?;
                check_len(n, lower.len())?;
                check_len(n, upper.len())
            }
            ProxOracle::Affine(set) => check_len(n, set.matrix().ncols()),
            ProxOracle::Power { r, weight } => {
                nonneg(*r, "power")?;
                nonneg(*weight, "weight")
            }
        }
    }

    /// `argmin_u ψ(u) + ‖u − x‖²/(2γ)`
    pub fn prox(&self, gamma: f64, x: &[f64]) -> Result<Vec<f64>> {
        if !(gamma > 0.0) {
            return Err(Error::arg("gamma must be positive"));
        }
        match self {
            ProxOracle::Zero => Ok(x.to_vec()),
            ProxOracle::L2Norm { lambda } => Ok(prox_euclidean_norm(gamma * lambda, x)),
            ProxOracle::L1Norm { lambda } => Ok(soft_threshold(gamma * lambda, x)),
            ProxOracle::Group { lambda, groups } => prox_group_norm(gamma * lambda, x, groups),
            ProxOracle::Ball2 { radius } => project_l2_ball(*radius, x),
            ProxOracle::Ball1 { radius, center } => project_l1_ball(*radius, center, x),
            ProxOracle::Simplex => Ok(project_simplex(x)),
            ProxOracle::HyperBox { a, b, lower, upper } => project_hyperplane_box(a, *b, lower, upper, x),
            ProxOracle::Affine(set) => set.project(x),
            ProxOracle::Tv1d { lambda } => Ok(prox_tv_1d(gamma * lambda, x)),
            ProxOracle::Power { r, weight } => prox_power_norm_weighted(gamma, *weight, *r, x),
        }
    }

    /// `ψ(x)`, `+∞` outside the domain of an indicator.
    pub fn value(&self, x: &[f64]) -> f64 {
        let scale = 1.0 + norm2(x);
        let tol = FEAS_TOL * scale;
        let indicator = |inside: bool| if inside { 0.0 } else { f64::INFINITY };
        match self {
            ProxOracle::Zero => 0.0,
            ProxOracle::L2Norm { lambda } => lambda * norm2(x),
            ProxOracle::L1Norm { lambda } => lambda * x.iter().map(|v| v.abs()).sum::<f64>(),
            ProxOracle::Group { lambda, groups } => {
                lambda
                    * groups
                        .iter()
                        .map(|g| g.iter().map(|&j| x[j] * x[j]).sum::<f64>().sqrt())
                        .sum::<f64>()
            }
            ProxOracle::Ball2 { radius } => indicator(norm2(x) <= radius + tol),
            ProxOracle::Ball1 { radius, center } => {
                let d: f64 = if center.is_empty() {
                    x.iter().map(|v| v.abs()).sum()
                } else {
                    x.iter().zip(center).map(|(a, b)| (a - b).abs()).sum()
                };
                indicator(d <= radius + tol)
            }
            ProxOracle::Simplex => indicator(ops::simplex_feasible(x, tol)),
            ProxOracle::HyperBox { a, b, lower, upper } => {
                let inside_box = x.iter().zip(lower).all(|(v, l)| *v >= l - tol)
                    && x.iter().zip(upper).all(|(v, u)| *v <= u + tol);
                let on_plane = (ops::inner(a, x) - b).abs() <= tol * (1.0 + norm2(a));
                indicator(inside_box && on_plane)
            }
            ProxOracle::Affine(set) => indicator(norm2(&set.residual(x)) <= tol * (1.0 + set.matrix().norm())),
            ProxOracle::Tv1d { lambda } => lambda * total_variation(x),
            ProxOracle::Power { r, weight } => weight * norm2(x).powf(r + 2.0),
        }
    }

    /// Moreau envelope value `ψ^γ(x)` together with the prox point.
    pub fn moreau(&self, gamma: f64, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let z = self.prox(gamma, x)?;
        let psi = if self.is_indicator() { 0.0 } else { self.value(&z) };
        let d = dist2(&z, x);
        Ok((psi + d * d / (2.0 * gamma), z))
    }

    pub fn to_json(&self) -> Value {
        let params = match self {
            ProxOracle::Zero | ProxOracle::Simplex => json!({}),
            ProxOracle::L2Norm { lambda } | ProxOracle::L1Norm { lambda } | ProxOracle::Tv1d { lambda } => {
                json!({ "lambda": lambda })
            }
            ProxOracle::Group { lambda, groups } => json!({ "lambda": lambda, "groups": groups }),
            ProxOracle::Ball2 { radius } => json!({ "radius": radius }),
            ProxOracle::Ball1 { radius, center } => json!({ "radius": radius, "center": center }),
            ProxOracle::HyperBox { a, b, lower, upper } => {
                let enc = |v: &Vec<f64>| -> Vec<Value> {
                    v.iter().map(|x| if x.is_finite() { json!(x) } else { Value::Null }).collect()
                };
                json!({ "a": a, "b": b, "lower": enc(lower), "upper": enc(upper) })
            }
            ProxOracle::Affine(set) => json!({
                "A": Matrix::Dense(set.matrix().clone()),
                "b": set.rhs(),
            }),
            ProxOracle::Power { r, weight } => json!({ "r": r, "weight": weight }),
        };
        json!({ "kind": self.kind(), "params": params })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::config("psi needs a string \"kind\""))?;
        let empty = json!({});
        let p = v.get("params").unwrap_or(&empty);
        let num = |key: &str| -> Result<f64> {
            p.get(key)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::config(format!("psi kind {kind:?} needs numeric param {key:?}")))
        };
        let vec_of = |key: &str, default_inf: f64| -> Result<Vec<f64>> {
            let arr = p
                .get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::config(format!("psi kind {kind:?} needs array param {key:?}")))?;
            arr.iter()
                .map(|e| match e {
                    Value::Null => Ok(default_inf),
                    other => other
                        .as_f64()
                        .ok_or_else(|| Error::config(format!("non-numeric entry in {key:?}"))),
                })
                .collect()
        };
        Ok(match kind {
            "zero" => ProxOracle::Zero,
            "l2norm" => ProxOracle::L2Norm { lambda: num("lambda")? },
            "l1norm" => ProxOracle::L1Norm { lambda: num("lambda")? },
            "tv1d" => ProxOracle::Tv1d { lambda: num("lambda")? },
            "group" => {
                let groups: Vec<Vec<usize>> = serde_json::from_value(
                    p.get("groups").cloned().ok_or_else(|| Error::config("group needs \"groups\""))?,
                )?;
                validate_groups(&groups, None)?;
                ProxOracle::Group { lambda: num("lambda")?, groups }
            }
            "ball2" => ProxOracle::Ball2 { radius: num("radius")? },
            "ball1" => ProxOracle::Ball1 {
                radius: num("radius")?,
                center: if p.get("center").is_some() { vec_of("center", 0.0)? } else { Vec::new() },
            },
            "simplex" => ProxOracle::Simplex,
            "hyperbox" => ProxOracle::HyperBox {
                a: vec_of("a", 0.0)?,
                b: num("b")?,
                lower: vec_of("lower", f64::NEG_INFINITY)?,
                upper: vec_of("upper", f64::INFINITY)?,
            },
            "affine" => {
                let a: Matrix = serde_json::from_value(
                    p.get("A").cloned().ok_or_else(|| Error::config("affine needs \"A\""))?,
                )?;
                ProxOracle::Affine(AffineSet::new(a.to_dense(), vec_of("b", 0.0)?)?)
            }
            "power" => ProxOracle::Power {
                r: num("r")?,
                weight: p.get("weight").and_then(Value::as_f64).unwrap_or(1.0),
            },
            other => {
                return Err(Error::config(format!(
                    "unknown psi kind {other:?}; expected one of {}",
                    Self::KINDS.join(", ")
                )))
            }
        })
    }
}

impl Serialize for ProxOracle {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ProxOracle {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let v = Value::deserialize(d)?;
        ProxOracle::from_json(&v).map_err(D::Error::custom)
    }
}
