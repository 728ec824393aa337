//! Randomized block coordinate descent on smooth surrogates of nonsmooth
//! convex objectives.
//!
//! The crate is organised bottom-up:
//!
//! * [`block`] – block partitions, weighted norms and the block sampler,
//! * [`linalg`] – the small dense/CSC matrix layer shared by everything else,
//! * [`problem`] – problem records and their JSON form,
//! * [`prox`] – proximal operators and projections,
//! * [`smoothing`] – Moreau, forward-backward, Douglas-Rachford and
//!   Nesterov surrogates behind one trait,
//! * [`solvers`] – plain, accelerated and restarted coordinate descent plus
//!   rate-constant calculators,
//! * [`bregman`] – relative-smooth coordinate descent with kernel subproblems,
//! * [`harness`] – generators, reference solutions and experiment grids.

pub mod block;
pub mod bregman;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod problem;
pub mod prox;
pub mod rng;
pub mod smoothing;
pub mod solvers;

pub use block::{BlockPartition, BlockSampler, LipschitzProfile};
pub use error::{Error, Result};
pub use linalg::Matrix;
pub use problem::{QuadraticComposite, SaddleProblem};
pub use prox::ProxOracle;
pub use rng::Pcg64;
pub use smoothing::{SmoothSurrogate, State};
