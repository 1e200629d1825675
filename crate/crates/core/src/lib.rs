//! Weighted low-rank approximation (WLRA) at desk scale.
//!
//! The crate bundles four things that are usually kept apart:
//!
//! * dense matrix kernels for the weighted Frobenius objective
//!   `sum_ij W_ij (M - U V^T)_ij^2` ([`matrix`]),
//! * exhaustive maximum-edge biclique oracles for small bipartite graphs
//!   ([`biclique`]),
//! * builders for the biclique-to-WLRA reduction instances, their witness
//!   factor pairs, and the associated rescalings ([`reductions`]),
//! * alternating-minimization solvers with multistart, divergence detection
//!   for unattained infima, and bound-verification reports ([`solver`],
//!   [`analysis`]).
//!
//! All numeric types are generic over the scalar via [`scalar::Scalar`]
//! (any `num_traits::Float`); the `*64` aliases at the crate root fix the
//! scalar to `f64`, which is what the CLI and the test suites use.

// the kernels index several arrays per loop; iterator chains obscure that
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod biclique;
pub mod error;
pub mod matrix;
pub mod reductions;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix64 = matrix::Matrix<f64>;
pub type WeightMatrix64 = matrix::WeightMatrix<f64>;
pub type MaskedMatrix64 = matrix::MaskedMatrix<f64>;
pub type FactorPair64 = matrix::FactorPair<f64>;
pub type ReductionInstance64 = reductions::ReductionInstance<f64>;
pub type SolveConfig64 = solver::SolveConfig<f64>;
pub type SolveResult64 = solver::SolveResult<f64>;
pub type BoundReport64 = analysis::BoundReport<f64>;

pub type Matrix32 = matrix::Matrix<f32>;
pub type WeightMatrix32 = matrix::WeightMatrix<f32>;
pub type FactorPair32 = matrix::FactorPair<f32>;
