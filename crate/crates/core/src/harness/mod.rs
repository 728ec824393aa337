//! Problem generators, reference solutions and experiment grids.

mod experiment;
mod generators;
mod reference;

pub use experiment::{
    median, quick_check_options, run_experiment, thread_cap, trace_file_name, ExperimentResult, ExperimentSpec,
    Generator, GroupSummary, ProblemSpec, RunFailure, RunOutcome, Summary, THREADS_ENV,
};
pub use generators::{
    gen_identity_l1, gen_quadratic_l1, gen_quadratic_l2, gen_quadratic_tv, gen_quartic, random_givens,
    sparse_normal, tv_spectrum, Instance,
};
pub use reference::{finite_diff_grad, reference_solve, reference_solve_with, Quality, Reference, ReferenceOptions};
