//! S-balanced configurations of the Newtonian n-body problem.
//!
//! A configuration `q` is S-balanced when `∇U(q) + λ Ŝ M q = 0`, where
//! `Ŝ` repeats the diagonal weight matrix `S` on every body. These are the
//! critical points of the potential restricted to the weighted sphere
//! `I_S(q) = 1`; with `S = I` they are the central configurations.

// `!(x < tol)` style tests are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod collinear;
pub mod config;
pub mod equilibria;
pub mod error;
pub mod flow;
pub mod inertia;
pub mod morse;
pub mod potential;
pub mod solver;

pub use config::{ConfigDocument, Configuration, MassVector, SpectrumS, Tolerances};
pub use error::{Result, SbcError};
pub use inertia::{inertia_indices, restricted_hessian, InertiaTriple};
pub use potential::{gradient, hessian, moment_of_inertia_s, potential, sbc_residual};
