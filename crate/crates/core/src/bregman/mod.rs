//! Coordinate descent relative to a reference kernel `φ`.
//!
//! Instead of a Lipschitz gradient, the objective is assumed to satisfy
//! `F(x + U_i d) ≤ F(x) + ⟨∇_i F(x), d⟩ + L_i D_φ(x + U_i d, x)` where
//! `D_φ` is the Bregman distance of the kernel along block `i`. Each step of
//! [`rrcd_run`] minimizes that model exactly.

mod kernel;
mod quartic;
mod rrcd;

pub use kernel::{bregman_distance, kernel_from_json, sextic_root, stationarity_residual, Kernel, PowerKernel, QuadKernel, Subproblem};
pub use quartic::{quartic_lipschitz, QuarticProblem, RelativeObjective};
pub use rrcd::{rrcd_run, RrcdResult, RrcdStep, ROOT_TOL, STATIONARITY_TOL};
