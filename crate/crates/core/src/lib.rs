//! Segmented Tau solver for the linear mixed-type functional differential
//! equation
//!
//! ```text
//! x'(t) = a(t) x(t) + b(t) x(t - 1) + c(t) x(t + 1),   t in (0, K - 1]
//! ```
//!
//! with `x = psi1` on `[-1, 0]` and `x = psi2` on `(K - 1, K]`.
//!
//! The solution is a piecewise polynomial: one degree-`n` polynomial per
//! unit subinterval, each the exact solution of the equation perturbed by a
//! Chebyshev-weighted term, all coupled through one dense linear system.
//!
//! The crate is `no_std` (with `alloc`); disable the default `std` feature
//! to build without the standard library. The `std` feature only adds
//! wall-clock timing to [`linalg::SolveDiagnostics`].
//!
//! Pipeline: [`problem::discretize`] → [`assemble`] → [`linalg::lu_solve`]
//! → [`solution::extract`]; [`solver::solve`] runs all of it.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod assemble;
pub mod canonical;
pub mod expr;
pub mod linalg;
pub mod poly;
pub mod problem;
pub mod solution;
pub mod solver;

pub use assemble::{AssemblyPath, TauSystem};
pub use expr::{parse, Expr};
pub use linalg::{lu_solve, SolveDiagnostics};
pub use poly::Poly;
pub use problem::{catalog, discretize, family_from_f, DiscretizedProblem, MfdeProblem};
pub use solution::{ErrorReport, TauSolution};
pub use solver::{solve, PathChoice, SolveError, SolveOutcome, SolverOptions};
