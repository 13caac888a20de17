//! Radial numerics for `i∂_t u + ∇·(|x|^b ∇u) − V u = −|x|^c |u|^p u`.

// `!(x > 0.0)` is used on purpose so that NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify;
pub mod cli;
pub mod config;
pub mod evolve;
pub mod functionals;
pub mod grid;
pub mod groundstate;
pub mod interp;
pub mod linalg;
pub mod params;
pub mod potential;
pub mod verify;
