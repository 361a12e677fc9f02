// SPDX-License-Identifier: MIT OR Apache-2.0

//! Hadamard finite parts.
//!
//! A regularized volume behaves like
//! `V(ε) = a₂ ε⁻² + a₁ log ε + a₀ + a₋₁ ε + O(ε²)`. The finite part is `a₀`.
//! It is recovered by linear least squares in the basis
//! `{ε⁻², log ε, 1, ε}`, optionally extended by further integer powers.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use crate::numerics::fit::least_squares;
use crate::Error;

/// Minimum number of samples accepted by the fitter.
pub const MIN_SAMPLES: usize = 6;

/// Relative tolerance on the ratio test for a geometric grid.
pub const GEOMETRIC_TOL: f64 = 1e-6;

/// Output of [`finite_part_fit`].
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePartResult {
    /// Coefficient of `ε⁻²`.
    pub a2: f64,
    /// Coefficient of `log ε`.
    pub a1: f64,
    /// Finite part.
    pub a0: f64,
    /// Coefficient of `ε`.
    pub a_minus1: f64,
    /// Coefficients of the extra powers, in the order requested.
    pub extra: Vec<(i32, f64)>,
    /// One-sigma standard error of `a0` from the residuals.
    pub uncertainty: f64,
    /// `|a0(every other sample) - a0|`, when the half grid still has
    /// enough samples.
    pub half_grid_shift: Option<f64>,
    /// Largest absolute fit residual.
    pub residual_max: f64,
    /// Condition number of the scaled design matrix.
    pub condition: f64,
}

impl FinitePartResult {
    /// `max(uncertainty, half_grid_shift)`.
    pub fn error_estimate(&self) -> f64 {
        self.uncertainty.max(self.half_grid_shift.unwrap_or(0.0))
    }
}

/// Fit with the default basis `{ε⁻², log ε, 1, ε}`.
pub fn finite_part_fit(samples: &[(f64, f64)]) -> Result<FinitePartResult, Error> {
    finite_part_fit_with(samples, &[])
}

/// Fit with the default basis plus `ε^p` for each `p` in `extra_powers`.
///
/// The samples must be `(ε, V(ε))` pairs on a geometric grid (any order).
pub fn finite_part_fit_with(samples: &[(f64, f64)], extra_powers: &[i32]) -> Result<FinitePartResult, Error> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InvalidInput("finite-part fit needs at least 6 samples"));
    }
    if extra_powers.iter().any(|p| matches!(p, -2 | 0 | 1)) {
        return Err(Error::InvalidInput("extra power duplicates the default basis"));
    }
    let mut sorted: Vec<(f64, f64)> = samples.to_vec();
    if sorted.iter().any(|(e, v)| !(*e > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput("samples need eps > 0 and finite values"));
    }
    sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
    let ratio = sorted[1].0 / sorted[0].0;
    if !(ratio < 1.0) {
        return Err(Error::InvalidInput("duplicate eps values"));
    }
    for w in sorted.windows(2) {
        if ((w[1].0 / w[0].0) / ratio - 1.0).abs() > GEOMETRIC_TOL {
            return Err(Error::InvalidInput("eps samples are not on a geometric grid"));
        }
    }
    let full = solve(&sorted, extra_powers)?;
    let half: Vec<(f64, f64)> = sorted.iter().step_by(2).copied().collect();
    let half_grid_shift = if half.len() > 4 + extra_powers.len() {
        solve(&half, extra_powers).ok().map(|h| (h.a0 - full.a0).abs())
    } else {
        None
    };
    Ok(FinitePartResult { half_grid_shift, ..full })
}

fn solve(samples: &[(f64, f64)], extra_powers: &[i32]) -> Result<FinitePartResult, Error> {
    let rows: Vec<Vec<f64>> = samples
        .iter()
        .map(|(e, _)| {
            let mut r = Vec::with_capacity(4 + extra_powers.len());
            r.extend_from_slice(&[e.powi(-2), e.ln(), 1.0, *e]);
            r.extend(extra_powers.iter().map(|p| e.powi(*p)));
            r
        })
        .collect();
    let rhs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let fit = least_squares(&rows, &rhs)?;
    let c = &fit.coeffs;
    Ok(FinitePartResult {
        a2: c[0],
        a1: c[1],
        a0: c[2],
        a_minus1: c[3],
        extra: extra_powers.iter().copied().zip(c[4..].iter().copied()).collect(),
        uncertainty: fit.std_errors[2],
        half_grid_shift: None,
        residual_max: fit.residual_max,
        condition: fit.condition,
    })
}

/// `∫_ε^1 x⁻³ dx = (ε⁻² - 1)/2`: the hyperbolic slab over unit area.
pub fn slab_volume(eps: f64) -> f64 {
    0.5 * (eps.powi(-2) - 1.0)
}

/// `∫_ε^1 x⁻³(1 + x² + x⁴/4) dx` in closed form.
pub fn funnel_volume(eps: f64) -> f64 {
    0.5 / (eps * eps) - eps.ln() - 0.375 - eps * eps / 8.0
}

/// Finite part of [`funnel_volume`]: `-3/8`.
pub const FUNNEL_FINITE_PART: f64 = -0.375;

/// Per-area volume `∫_ε^1 x⁻³ v(x) dx` by Gauss-Legendre quadrature in
/// `t = log x`, on `panels` uniform panels.
pub fn layer_quadrature<F: Fn(f64) -> f64>(density: F, eps: f64, panels: usize) -> f64 {
    let gl = crate::numerics::quad::GaussLegendre::new(20);
    let breaks = crate::numerics::quad::uniform_breaks(eps.ln(), 0.0, panels.max(1));
    gl.integrate_panels(&breaks, |t| {
        let x = t.exp();
        density(x) / (x * x)
    })
}

/// Antiderivative `A(U) = -1/(2U²) + log U - ½ log(1 - U²)` of
/// `dU/(U³(1 - U²))`, the model volume per unit `dv dw` in blow-up
/// coordinates.
pub fn layer_antiderivative(big_u: f64) -> f64 {
    -0.5 / (big_u * big_u) + big_u.ln() - 0.5 * (-big_u * big_u).ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::geometric_sequence;
    use proptest::prelude::*;

    fn sample<F: Fn(f64) -> f64>(f: F, eps: &[f64]) -> Vec<(f64, f64)> {
        eps.iter().map(|e| (*e, f(*e))).collect()
    }

    #[test]
    fn slab_is_recovered_from_quadrature() {
        let eps = geometric_sequence(0.5, 0.5, 10);
        let s = sample(|e| layer_quadrature(|_| 1.0, e, 8), &eps);
        let r = finite_part_fit(&s).unwrap();
        assert!((r.a2 - 0.5).abs() < 1e-9, "{r:?}");
        assert!(r.a1.abs() < 1e-9);
        assert!((r.a0 + 0.5).abs() < 1e-9);
    }

    #[test]
    fn funnel_finite_part() {
        let eps = geometric_sequence(2e-3, 0.5, 8);
        let s = sample(funnel_volume, &eps);
        let r = finite_part_fit(&s).unwrap();
        assert!((r.a0 - FUNNEL_FINITE_PART).abs() < 1e-6, "{r:?}");
        let r2 = finite_part_fit_with(&sample(funnel_volume, &geometric_sequence(0.2, 0.5, 10)), &[2]).unwrap();
        assert!((r2.a0 - FUNNEL_FINITE_PART).abs() < 1e-8, "{r2:?}");
        assert!((r2.a1 + 1.0).abs() < 1e-8);
    }

    #[test]
    fn quadrature_matches_closed_funnel() {
        for e in [0.3, 0.01] {
            let q = layer_quadrature(|x| 1.0 + x * x + 0.25 * x.powi(4), e, 8);
            assert!((q - funnel_volume(e)).abs() < 1e-9 * funnel_volume(e));
        }
    }

    #[test]
    fn layer_antiderivative_differentiates_back() {
        for u in [0.05, 0.3, 0.7] {
            let d = crate::numerics::diff::d1_richardson(layer_antiderivative, u, 1e-3);
            let exact = 1.0 / (u * u * u * (1.0 - u * u));
            assert!((d / exact - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_grids() {
        let few = sample(slab_volume, &geometric_sequence(0.5, 0.5, 5));
        assert!(finite_part_fit(&few).is_err());
        let mut irregular = sample(slab_volume, &geometric_sequence(0.5, 0.5, 7));
        irregular[3].0 *= 1.01;
        assert!(finite_part_fit(&irregular).is_err());
        let tight = sample(slab_volume, &geometric_sequence(0.5, 0.999_999, 7));
        assert!(matches!(finite_part_fit(&tight), Err(Error::Fit(_))));
    }

    #[test]
    fn log_term_alone() {
        let s = sample(|e| 7.0 - e.ln(), &geometric_sequence(0.1, 0.5, 7));
        let r = finite_part_fit(&s).unwrap();
        assert!((r.a0 - 7.0).abs() < 1e-10 && (r.a1 + 1.0).abs() < 1e-10);
        assert!(r.half_grid_shift.is_none());
    }

    proptest! {
        #[test]
        fn exact_expansions_are_recovered(
            a2 in -2.0f64..2.0, a1 in -2.0f64..2.0, a0 in -2.0f64..2.0, am in -2.0f64..2.0,
            e0 in 0.05f64..0.5, r in 0.3f64..0.7,
        ) {
            let eps = geometric_sequence(e0, r, 9);
            let s = sample(|e| a2 / (e * e) + a1 * e.ln() + a0 + am * e, &eps);
            let fit = finite_part_fit(&s).unwrap();
            // Rounding in V(ε) near the smallest ε sets the attainable accuracy.
            let tol = 1e-13 * (1.0 + a2.abs() / (eps[8] * eps[8])) + 1e-9;
            prop_assert!((fit.a0 - a0).abs() < tol);
            prop_assert!(fit.half_grid_shift.unwrap() < 10.0 * tol);
        }
    }
}
