// SPDX-License-Identifier: MIT OR Apache-2.0

//! Renormalized volume.
//!
//! * [`finite_part`]: the Hadamard finite part of `V(ε)` from samples on a
//!   geometric grid, plus closed-form oracles.
//! * [`collar`]: regularized volumes in the blow-up coordinates of the cusp
//!   model and the conformal variation formula on the collar.
//! * [`schwarzian`]: Schwarzian derivatives of holomorphic maps and the
//!   identity relating them to the Liouville field of a pulled-back metric.
//! * [`expansion`]: the boundary expansion `x²g = h₀ + x²h₂ + x⁴h₄`, the
//!   Epstein-surface check of `h₂` and the `Vol_R` derivative on product
//!   families.

pub mod collar;
pub mod expansion;
pub mod finite_part;
pub mod schwarzian;

pub use finite_part::{finite_part_fit, finite_part_fit_with, FinitePartResult};
