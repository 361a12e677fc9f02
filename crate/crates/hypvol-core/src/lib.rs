// SPDX-License-Identifier: MIT OR Apache-2.0

//! Numerical core for hyperbolic 3-manifolds built from Schottky data and
//! explicit cusp models.
//!
//! The crate is `no_std` and only needs an allocator. It provides:
//!
//! * [`moebius`]: PSL2(C) maps, fixed points, multipliers, canonical circles
//!   and the Poincare extension to upper half-space;
//! * [`schottky`]: classical Schottky groups and admissible degenerating
//!   families;
//! * [`cusp_model`]: closed-form model metrics and isometries for the
//!   degenerating solid torus around a pinching geodesic;
//! * [`uniformize`]: a Newton solver for the curvature -1 conformal factor;
//! * [`hamilton_jacobi`]: characteristics solvers for geodesic boundary
//!   defining functions;
//! * [`renvol`]: finite-part fitting, regularized volumes, variation
//!   formulas and Schwarzian identities;
//! * [`degeneration`]: the epsilon sweep towards the cusped limit.
//!
//! Conventions used throughout: the Laplacian is the positive one,
//! `Scal = 2K`, and "hyperbolic" means Gaussian curvature -1.

#![no_std]
#![forbid(unsafe_code)]
#![warn(missing_debug_implementations)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cusp_model;
pub mod degeneration;
pub mod error;
pub mod geometry;
pub mod hamilton_jacobi;
pub mod moebius;
pub mod numerics;
pub mod renvol;
pub mod schottky;
pub mod uniformize;

pub use error::Error;

/// Complex scalar used for boundary coordinates.
pub type C64 = num_complex::Complex64;
