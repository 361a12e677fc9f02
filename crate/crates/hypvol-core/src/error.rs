// SPDX-License-Identifier: MIT OR Apache-2.0

//! Crate-wide error type.

use crate::numerics::banded::BandError;
use crate::numerics::fit::FitError;
use crate::numerics::ode::OdeError;

/// Everything that can go wrong inside the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Point or parameter outside the domain of a chart or formula.
    #[error("outside the domain: {0}")]
    OutOfDomain(&'static str),
    /// Invalid configuration or malformed input data.
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    /// A Moebius map has the wrong type for the requested operation.
    #[error("expected a {expected} map, found {found}")]
    WrongKind {
        /// Classification of the offending map.
        found: &'static str,
        /// What the operation needs.
        expected: &'static str,
    },
    /// A fixed point sits at infinity where a finite one is required.
    #[error("fixed point at infinity")]
    FixedPointAtInfinity,
    /// Two Schottky disks overlap.
    #[error("not adapted: disks {first} and {second} overlap (gap {gap:.3e})")]
    NotAdapted {
        /// Index of the first circle.
        first: usize,
        /// Index of the second circle.
        second: usize,
        /// Center distance minus radius sum.
        gap: f64,
    },
    /// A generator does not map its circle pair onto each other.
    #[error("pairing violated for generator {generator} (max deviation {deviation:.3e})")]
    PairingViolated {
        /// Generator index.
        generator: usize,
        /// Largest sampled deviation from the target circle.
        deviation: f64,
    },
    /// The canonical-circle construction fails at this parameter.
    #[error("family not admissible at eps = {eps:.6e}")]
    NotAdmissible {
        /// Degeneration parameter.
        eps: f64,
    },
    /// Newton iteration failed to converge.
    #[error("Newton iteration diverged after {iterations} steps (residual {residual:.3e})")]
    NewtonDiverged {
        /// Iterations performed.
        iterations: usize,
        /// Last residual norm.
        residual: f64,
    },
    /// The curvature data admits no hyperbolic conformal representative.
    #[error("no hyperbolic representative in the conformal class")]
    NoHyperbolicRepresentative,
    /// A characteristic could not be steered onto its target node.
    #[error("flow-map inversion failed at v = {v:.6}, w = {w:.6}, U = {level:.4}")]
    FlowInversion {
        /// Target v.
        v: f64,
        /// Target w.
        w: f64,
        /// Target level.
        level: f64,
    },
    /// ODE integration failure.
    #[error(transparent)]
    Ode(#[from] OdeError),
    /// Least-squares failure.
    #[error(transparent)]
    Fit(#[from] FitError),
    /// Banded linear algebra failure.
    #[error(transparent)]
    Band(#[from] BandError),
}
