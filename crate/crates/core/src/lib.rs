//! Radially symmetric mean curvature flow with a prescribed contact angle on a cone.

// `!(x > 0.0)` is used on purpose so that NaN fails the check too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod error;
pub mod homog;
pub mod interp;
pub mod io;
pub mod ode;
pub mod pde;
pub mod profile;
pub mod selfsimilar;
pub mod tridiag;

pub use compare::{
    barrier_solve, preceq, Barrier, Candidate, OrderWitness, OrderedGraph, ResidualReport,
};
pub use error::{Error, Result};
pub use homog::{
    fit_exponent, run_sandwich, schedule, LineFit, SandwichConfig, SandwichReport, Schedule,
};
pub use pde::{
    AdmissibleInitial, AngleFunction, Evolution, Scheme, Snapshot, SolverConfig, TimeStepping,
};
pub use profile::{solve_profile, Case, ProfileTolerances, SelfSimilarProfile};
pub use selfsimilar::SelfSimilarSolution;
