//! Equilibria, stability and bifurcation of a frustrated nematic cell.
//!
//! A nematic liquid crystal confined between two plates with orthogonal
//! strong anchoring is modelled by a Landau-de Gennes Q-tensor that keeps
//! `e_x` as an eigenvector, reducing the state to three scalar fields
//! `(q1, q2, q3)` on `[-1, 1]`. Two dimensionless parameters remain: a
//! reduced temperature `theta < 1` and a reduced cell thickness `lambda`.
//!
//! The crate covers the whole solution landscape at desk scale:
//!
//! - the bulk potential, its exact gradient and Hessian ([`qtensor`]);
//! - finite-difference energies, Euler-Lagrange residuals and Hessians on a
//!   uniform grid ([`grid`], [`energy`]);
//! - damped Newton, semi-implicit gradient flow and a seeded multi-start
//!   harness ([`newton`]);
//! - second-variation quadratic forms and the stability eigenvalues
//!   `nu(lambda)`, `mu(lambda)`, `eta(lambda)` ([`stability`]);
//! - continuation of the eigenvalue-exchange branch, location of the
//!   critical thickness `lambda_c`, pitchfork branch switching and the two
//!   bent-director arms ([`continuation`]);
//! - the thin-cell uniqueness certificate and the thick-cell uniaxial and
//!   heteroclinic limits ([`asymptotics`]).
//!
//! The crate is `no_std`-compatible (with `alloc`); disable the default
//! `std` feature and enable `libm` to build without the standard library.

#![cfg_attr(not(feature = "std"), no_std)]
// index-based loops mirror the stencil arithmetic throughout, and the
// `!(x > 0.0)` comparisons deliberately reject NaN
#![allow(clippy::needless_range_loop)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(all(not(feature = "std"), not(feature = "libm")))]
compile_error!("either the `std` or the `libm` feature must be enabled");

pub mod asymptotics;
pub mod banded;
pub mod continuation;
pub mod energy;
pub mod error;
pub mod grid;
pub mod newton;
pub mod qtensor;
pub mod stability;

mod fp;
mod rng;

pub use error::{Error, Result};
pub use grid::{boundary_data, BoundaryData, EEProfile, Grid, Profile};
pub use qtensor::{MaterialConstants, QComponents, QMatrix, ReducedTemperature};
