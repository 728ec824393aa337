//! Randomized block coordinate solvers on smooth surrogates.
//!
//! [`cd_run`] is plain coordinate descent with step `1/L_i`, [`accd_run`] the
//! accelerated variant driven by the `(A_k, B_k)` estimate sequence, and
//! [`restart_run`] wraps the accelerated method with better-of-two restarts.
//! All three stop when the full surrogate gradient drops below the tolerance
//! (checked every `trace_every` epochs) or when the epoch budget runs out.

mod accd;
mod cd;
mod constants;
mod restart;
mod trace;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use accd::{accd_run, accd_step_params, AccdParams};
pub use cd::cd_run;
pub use constants::{
    contraction_c1, doubling_schedule, growth_constant_fb, growth_constant_me, growth_constant_ns, restart_period,
    RateConstants,
};
pub use restart::{restart_run, RestartSchedule};
pub use trace::{read_trace_csv, trace_csv_string, write_trace_csv, TraceRecord, TRACE_HEADER};

use crate::block::{BlockSampler, LipschitzProfile};
use crate::error::{Error, Result};
use crate::linalg::norm2;
use crate::rng::Pcg64;
use crate::smoothing::{SmoothSurrogate, State};

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Sampling exponent: block `i` is drawn with probability `∝ L_i^alpha`.
    pub alpha: f64,
    /// One epoch is `N` coordinate steps.
    pub max_epochs: usize,
    pub grad_tol: f64,
    pub seed: u64,
    pub trace_every: usize,
    /// Strong convexity of the surrogate in the `‖·‖_{1−α}` norm.
    pub sigma: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { alpha: 0.0, max_epochs: 1000, grad_tol: 0.1, seed: 0, trace_every: 1, sigma: 0.0 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if self.max_epochs == 0 {
            return Err(Error::config("epochs must be at least 1"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::config(format!("tol must be positive, got {}", self.grad_tol)));
        }
        if self.trace_every == 0 {
            return Err(Error::config("trace_every must be at least 1"));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::config("sigma must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub x: Vec<f64>,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    /// Coordinate steps taken.
    pub iterations: u64,
    pub epochs: f64,
    pub f_gamma: f64,
    pub grad_norm: f64,
    /// `F_γ(x̃_r)` for `r = 0, 1, ...` (restart runs only).
    pub round_values: Vec<f64>,
}

/// What an observer sees after every coordinate step.
pub struct StepInfo<'a> {
    pub k: u64,
    pub block: usize,
    pub x: &'a State,
}

pub type Observer<'a> = &'a mut dyn FnMut(&StepInfo<'_>);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Cd,
    Accd,
    Restart,
}

impl SolverKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverKind::Cd => "cd",
            SolverKind::Accd => "accd",
            SolverKind::Restart => "restart",
        }
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cd" => Ok(SolverKind::Cd),
            "accd" => Ok(SolverKind::Accd),
            "restart" => Ok(SolverKind::Restart),
            other => Err(Error::config(format!("unknown solver {other:?}; valid choices are cd, accd, restart"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RestartMode {
    Fixed,
    Doubling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestartConfig {
    pub mode: RestartMode,
    /// Period (fixed) or base period (doubling) in coordinate steps.
    #[serde(rename = "K0")]
    pub k0: u64,
}

/// Run configuration as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub solver: SolverKind,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart: Option<RestartConfig>,
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
    #[serde(default)]
    pub sigma: f64,
}

fn default_epochs() -> usize {
    1000
}

fn default_tol() -> f64 {
    0.1
}

fn default_trace_every() -> usize {
    1
}

impl RunConfig {
    pub fn new(solver: SolverKind) -> Self {
        RunConfig {
            solver,
            alpha: 0.0,
            epochs: default_epochs(),
            tol: default_tol(),
            seed: 0,
            restart: None,
            trace_every: 1,
            sigma: 0.0,
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            alpha: self.alpha,
            max_epochs: self.epochs,
            grad_tol: self.tol,
            seed: self.seed,
            trace_every: self.trace_every,
            sigma: self.sigma,
        }
    }

    /// Restart schedule; without an explicit one, doubling from one epoch.
    pub fn schedule(&self, blocks: usize) -> Result<RestartSchedule> {
        match &self.restart {
            None => Ok(RestartSchedule::Doubling(blocks as u64)),
            Some(r) if r.k0 == 0 => Err(Error::config("restart K0 must be at least 1")),
            Some(RestartConfig { mode: RestartMode::Fixed, k0 }) => Ok(RestartSchedule::Fixed(*k0)),
            Some(RestartConfig { mode: RestartMode::Doubling, k0 }) => Ok(RestartSchedule::Doubling(*k0)),
        }
    }
}

/// Runs the configured solver from `x0`.
pub fn run<S: SmoothSurrogate + ?Sized>(s: &S, x0: &[f64], cfg: &RunConfig) -> Result<RunResult> {
    let sc = cfg.solver_config();
    match cfg.solver {
        SolverKind::Cd => cd_run(s, x0, &sc, None),
        SolverKind::Accd => accd_run(s, x0, &sc, None),
        SolverKind::Restart => restart_run(s, x0, &sc, cfg.schedule(s.partition().count())?, None),
    }
}

/// Bookkeeping shared by the three solvers: sampling, step counting,
/// stopping checks and trace rows.
pub(crate) struct Driver<'a, S: SmoothSurrogate + ?Sized> {
    pub s: &'a S,
    pub cfg: &'a SolverConfig,
    pub sampler: BlockSampler,
    pub rng: Pcg64,
    pub blocks: u64,
    pub k: u64,
    pub budget: u64,
    pub check_every: u64,
    pub trace: Vec<TraceRecord>,
    pub converged: bool,
    start: Instant,
    observer: Option<Observer<'a>>,
}

impl<'a, S: SmoothSurrogate + ?Sized> Driver<'a, S> {
    /// `sampling_exponent` selects the distribution `∝ L_i^e`.
    pub fn new(s: &'a S, cfg: &'a SolverConfig, sampling_exponent: f64, observer: Option<Observer<'a>>) -> Result<Self> {
        cfg.validate()?;
        let lip = s.coord_lipschitz();
        if let Some(bad) = lip.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::arg(format!("block Lipschitz constants must be positive and finite, found {bad}")));
        }
        let profile = LipschitzProfile::new(lip.to_vec(), sampling_exponent)?;
        let blocks = s.partition().count() as u64;
        Ok(Driver {
            s,
            cfg,
            sampler: BlockSampler::new(&profile),
            rng: Pcg64::seed_from(cfg.seed),
            blocks,
            k: 0,
            budget: blocks * cfg.max_epochs as u64,
            check_every: blocks * cfg.trace_every as u64,
            trace: Vec::new(),
            converged: false,
            start: Instant::now(),
            observer,
        })
    }

    pub fn exhausted(&self) -> bool {
        self.k >= self.budget
    }

    pub fn at_checkpoint(&self) -> bool {
        self.k % self.check_every == 0
    }

    pub fn draw(&mut self) -> usize {
        self.sampler.draw(&mut self.rng)
    }

    pub fn block_grad(&self, st: &State, i: usize) -> Result<Vec<f64>> {
        let g = self.s.coord_grad(st, i)?;
        if g.iter().any(|v| !v.is_finite()) {
            return Err(self.failure(st, format!("non-finite gradient in block {i}")));
        }
        Ok(g)
    }

    pub fn failure(&self, st: &State, what: String) -> Error {
        let xn = norm2(&st.x);
        let cn = norm2(&st.cache);
        Error::numerical(self.k as usize, format!("{what}; ‖x‖ = {xn:e}, ‖cache‖ = {cn:e}"))
    }

    pub fn notify(&mut self, block: usize, x: &State) {
        if let Some(obs) = self.observer.as_mut() {
            obs(&StepInfo { k: self.k, block, x });
        }
    }

    /// Appends a trace row for `x` and returns its gradient norm.
    pub fn record(&mut self, x: &State) -> Result<f64> {
        let f_gamma = self.s.value(x)?;
        let g = self.s.full_grad(x)?;
        let grad_norm = norm2(&g);
        if !f_gamma.is_finite() || !grad_norm.is_finite() {
            return Err(self.failure(x, format!("non-finite surrogate value {f_gamma} or gradient norm {grad_norm}")));
        }
        let f_orig_at_b = self.s.objective(&self.s.map_b(x)?);
        self.trace.push(TraceRecord {
            k: self.k,
            epoch: self.k as f64 / self.blocks as f64,
            time_s: self.start.elapsed().as_secs_f64(),
            f_gamma,
            f_orig_at_b,
            grad_norm,
        });
        Ok(grad_norm)
    }

    /// Records `x` and reports whether the stopping rule is met.
    pub fn check(&mut self, x: &State) -> Result<bool> {
        let gn = self.record(x)?;
        self.converged = gn <= self.cfg.grad_tol;
        Ok(self.converged)
    }

    pub fn finish(self, x: &State, round_values: Vec<f64>) -> Result<RunResult> {
        let mut me = self;
        if me.trace.last().map(|t| t.k) != Some(me.k) {
            me.check(x)?;
        }
        let last = me.trace.last().cloned().expect("trace has at least one row");
        Ok(RunResult {
            x: x.x.clone(),
            converged: me.converged,
            iterations: me.k,
            epochs: me.k as f64 / me.blocks as f64,
            f_gamma: last.f_gamma,
            grad_norm: last.grad_norm,
            trace: me.trace,
            round_values,
        })
    }
}
