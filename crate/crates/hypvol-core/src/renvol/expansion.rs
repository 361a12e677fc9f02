// SPDX-License-Identifier: MIT OR Apache-2.0

//! Boundary expansion of a metric in geodesic normal form.
//!
//! For `g = (dx² + h_x)/x²` with `h_x = h₀ + x²h₂ + x⁴h₄`, the tangential
//! block of `x²g` is fitted in powers of `x²` at a boundary point. For
//! hyperbolic `g` the coefficients satisfy
//! `tr_{h₀} h₂ = -½ Scal(h₀)`, `δ_{h₀} h₂ = ½ d Scal(h₀)` and
//! `h₄ = ¼ h₂ h₀⁻¹ h₂`, which [`expansion_checks`] measures.
//!
//! [`EpsteinMetric`] realizes the normal form for a conformal boundary
//! metric `e^φ|dz|²` by pulling back `g_{ℍ³}` along the envelope of
//! horospheres of Euclidean diameter `ε e^{-φ/2}`. Its `h₂` is compared
//! with `Re((∂²φ - ½(∂φ)²) dz²) + ∂∂̄φ |dz|²` ([`epstein_h2`]).

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use nalgebra::{Matrix2, Matrix3};

use crate::geometry::{christoffel, gaussian_curvature, jacobian, pullback, CurvatureFd, FnMetric, MetricPatch};
use crate::hamilton_jacobi::BoundaryData;
use crate::numerics::fit::least_squares;
use crate::numerics::quad::GaussLegendre;
use crate::renvol::finite_part::{finite_part_fit, FinitePartResult};
use crate::renvol::schwarzian::wirtinger;
use crate::{Error, C64};

/// Fitted coefficients of `x²g` at one boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorExpansion {
    /// Boundary metric.
    pub h0: Matrix2<f64>,
    /// Second-order coefficient.
    pub h2: Matrix2<f64>,
    /// Fourth-order coefficient.
    pub h4: Matrix2<f64>,
    /// Largest `|x²g₀₀ - 1|` or `|x²g₀ᵢ|` over the samples.
    pub normal_form_defect: f64,
    /// Largest fit residual.
    pub fit_residual: f64,
}

/// Default sample heights for [`boundary_expansion`].
pub const DEFAULT_HEIGHTS: [f64; 8] = [0.04, 0.055, 0.07, 0.085, 0.1, 0.115, 0.13, 0.15];

/// Fit `x²g_{ij}(x, y)`, `i, j ∈ {1, 2}`, in powers `1, x², x⁴, x⁶` over the
/// heights `xs` (at least 5).
pub fn boundary_expansion<M: MetricPatch<3> + ?Sized>(g: &M, y: [f64; 2], xs: &[f64]) -> Result<TensorExpansion, Error> {
    if xs.len() < 5 || xs.iter().any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidInput("boundary expansion needs >= 5 positive heights"));
    }
    let rows: Vec<Vec<f64>> = xs.iter().map(|x| (0..4).map(|k| x.powi(2 * k)).collect()).collect();
    let mut samples = Vec::with_capacity(xs.len());
    let mut defect: f64 = 0.0;
    for x in xs {
        let m = g.metric(&[*x, y[0], y[1]]) * (x * x);
        defect = defect.max((m[(0, 0)] - 1.0).abs()).max(m[(0, 1)].abs()).max(m[(0, 2)].abs());
        samples.push(m);
    }
    let mut h = [Matrix2::zeros(); 3];
    let mut fit_residual: f64 = 0.0;
    for (i, j) in [(0, 0), (0, 1), (1, 1)] {
        let rhs: Vec<f64> = samples.iter().map(|m| m[(i + 1, j + 1)]).collect();
        let fit = least_squares(&rows, &rhs)?;
        fit_residual = fit_residual.max(fit.residual_max);
        for k in 0..3 {
            h[k][(i, j)] = fit.coeffs[k];
            h[k][(j, i)] = fit.coeffs[k];
        }
    }
    Ok(TensorExpansion {
        h0: h[0],
        h2: h[1],
        h4: h[2],
        normal_form_defect: defect,
        fit_residual,
    })
}

/// Residuals of the hyperbolic constraints at one boundary point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionChecks {
    /// The expansion at the point.
    pub expansion: TensorExpansion,
    /// `Scal(h₀) = 2K`.
    pub scal: f64,
    /// `|tr_{h₀}h₂ + ½Scal|`.
    pub trace: f64,
    /// `max_j |(δh₂)_j - ½∂_j Scal|` with `δ = -div`.
    pub divergence: f64,
    /// `max |h₄ - ¼h₂h₀⁻¹h₂|`.
    pub h4: f64,
}

/// Evaluate the constraints with boundary differences of step `step`.
pub fn expansion_checks<M: MetricPatch<3> + ?Sized>(g: &M, y: [f64; 2], xs: &[f64], step: f64) -> Result<ExpansionChecks, Error> {
    let e = boundary_expansion(g, y, xs)?;
    let h0_at = |p: &[f64; 2]| boundary_expansion(g, *p, xs).map(|t| t.h0).unwrap_or(Matrix2::from_element(f64::NAN));
    let h0_patch = FnMetric(h0_at);
    let fd = CurvatureFd { step: 1.0, richardson: false };
    let scal_at = |p: &[f64; 2]| 2.0 * gaussian_curvature(&h0_patch, p, step, fd);
    let scal = scal_at(&y);
    let inv = e.h0.try_inverse().ok_or(Error::InvalidInput("degenerate boundary metric"))?;
    let trace = ((inv * e.h2).trace() + 0.5 * scal).abs();
    let h4 = (e.h4 - 0.25 * e.h2 * inv * e.h2).amax();

    let gamma = christoffel(&h0_patch, &y, step);
    let shifted = |k: usize, t: f64| {
        let mut p = y;
        p[k] += t;
        p
    };
    let d4 = |f: &dyn Fn(f64) -> Matrix2<f64>| (f(-2.0 * step) - f(2.0 * step) + (f(step) - f(-step)) * 8.0) / (12.0 * step);
    let mut dh2 = [Matrix2::zeros(); 2];
    let mut dscal = [0.0; 2];
    for k in 0..2 {
        dh2[k] = d4(&|t| boundary_expansion(g, shifted(k, t), xs).map(|x| x.h2).unwrap_or(Matrix2::from_element(f64::NAN)));
        dscal[k] = d4(&|t| Matrix2::from_element(scal_at(&shifted(k, t))))[(0, 0)];
    }
    let mut divergence: f64 = 0.0;
    for j in 0..2 {
        let mut div = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                let mut cov = dh2[k][(i, j)];
                for m in 0..2 {
                    cov -= gamma[m][k][i] * e.h2[(m, j)] + gamma[m][k][j] * e.h2[(i, m)];
                }
                div += inv[(i, k)] * cov;
            }
        }
        divergence = divergence.max((-div - 0.5 * dscal[j]).abs());
    }
    Ok(ExpansionChecks { expansion: e, scal, trace, divergence, h4 })
}

/// Product-form metric `(dx² + h₀((I + x²A/2)·, (I + x²A/2)·))/x²`,
/// `A = h₀⁻¹h₂`, from closures for `h₀(y)` and `h₂(y)`.
#[derive(Clone, Copy)]
pub struct ProductForm<F, G> {
    /// Boundary metric.
    pub h0: F,
    /// Second-order coefficient.
    pub h2: G,
}

impl<F, G> core::fmt::Debug for ProductForm<F, G> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("ProductForm(..)")
    }
}

impl<F, G> ProductForm<F, G>
where
    F: Fn(&[f64; 2]) -> Matrix2<f64>,
    G: Fn(&[f64; 2]) -> Matrix2<f64>,
{
    /// `h_x` at `(x, y)`.
    pub fn h_x(&self, x: f64, y: &[f64; 2]) -> Matrix2<f64> {
        let h0 = (self.h0)(y);
        let h2 = (self.h2)(y);
        let inv = h0.try_inverse().unwrap_or(Matrix2::from_element(f64::NAN));
        h0 + h2 * (x * x) + h2 * inv * h2 * (0.25 * x.powi(4))
    }
}

impl<F, G> MetricPatch<3> for ProductForm<F, G>
where
    F: Fn(&[f64; 2]) -> Matrix2<f64>,
    G: Fn(&[f64; 2]) -> Matrix2<f64>,
{
    fn metric(&self, p: &[f64; 3]) -> Matrix3<f64> {
        let h = self.h_x(p[0], &[p[1], p[2]]);
        let s = 1.0 / (p[0] * p[0]);
        Matrix3::new(s, 0.0, 0.0, 0.0, h[(0, 0)] * s, h[(0, 1)] * s, 0.0, h[(1, 0)] * s, h[(1, 1)] * s)
    }
}

/// Pullback of `g_{ℍ³}` along the Epstein map of `e^φ|dz|²`, in
/// coordinates `(ε, x, y)`.
#[derive(Debug, Clone, Copy)]
pub struct EpsteinMetric<D> {
    /// Boundary log-density `φ` with its gradient.
    pub phi: D,
    /// Difference step for the Jacobian.
    pub step: f64,
}

impl<D: BoundaryData> EpsteinMetric<D> {
    /// Construct with the default Jacobian step `1e-3`.
    pub fn new(phi: D) -> Self {
        Self { phi, step: 1e-3 }
    }

    /// Half-space point `(X, Y, T)` of the envelope at `(ε, x, y)`.
    pub fn point(&self, p: &[f64; 3]) -> [f64; 3] {
        let (eps, x, y) = (p[0], p[1], p[2]);
        let (f, fx, fy) = self.phi.eval(x, y);
        let d = eps * (-0.5 * f).exp();
        // ∂_z̄ D = ½(D_x + i D_y), D_x = -½ φ_x D.
        let dbar = C64::new(-0.25 * fx * d, -0.25 * fy * d);
        let t = d / (1.0 + dbar.norm_sqr());
        let z = C64::new(x, y) - dbar * t;
        [z.re, z.im, t]
    }
}

impl<D: BoundaryData> MetricPatch<3> for EpsteinMetric<D> {
    fn metric(&self, p: &[f64; 3]) -> Matrix3<f64> {
        let jac = jacobian(|q: &[f64; 3]| self.point(q), p, self.step * p[0].min(1.0));
        let t = self.point(p)[2];
        pullback(&jac, &(Matrix3::identity() / (t * t)))
    }
}

/// `Re((∂²φ - ½(∂φ)²) dz²) + ∂∂̄φ |dz|²` as a matrix on `(x, y)`.
pub fn epstein_h2<F: Fn(f64, f64) -> f64>(phi: F, x: f64, y: f64, h: f64) -> Matrix2<f64> {
    let lap = crate::numerics::diff::d2(|t| phi(t, y), x, h) + crate::numerics::diff::d2(|t| phi(x, t), y, h);
    let (d1, d2) = wirtinger(&phi, C64::new(x, y), h);
    let q = d2 - d1 * d1 * 0.5;
    let s = 0.25 * lap;
    Matrix2::new(q.re + s, -q.im, -q.im, -q.re + s)
}

/// Regularized volume of the product slab `ε ≤ x ≤ 1` over the flat unit
/// torus, for constant `h₀, h₂`. Returns the finite-part fit over the
/// geometric grid `eps`.
pub fn product_slab_vol_r(h0: &Matrix2<f64>, h2: &Matrix2<f64>, eps: &[f64]) -> Result<FinitePartResult, Error> {
    let inv = h0.try_inverse().ok_or(Error::InvalidInput("degenerate boundary metric"))?;
    let a = inv * h2;
    let sqrt_det0 = h0.determinant().sqrt();
    let gl = GaussLegendre::new(24);
    let density = |x: f64| {
        let t = 0.5 * x * x;
        let det = 1.0 + t * a.trace() + t * t * a.determinant();
        sqrt_det0 * det.abs() / (x * x * x)
    };
    let samples: Vec<(f64, f64)> = eps
        .iter()
        .map(|e| {
            let breaks = crate::numerics::quad::uniform_breaks(e.ln(), 0.0, 8);
            (*e, gl.integrate_panels(&breaks, |s| s.exp() * density(s.exp())))
        })
        .collect();
    finite_part_fit(&samples)
}

/// Derivative of `Vol_R` along a constant-coefficient product family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolRDerivative {
    /// Central difference of `Vol_R(t)`.
    pub finite_difference: f64,
    /// `-¼∫⟨ḣ₀, h₂ - ½h₀⟩ dA`.
    pub pairing_half: f64,
    /// `-¼∫⟨ḣ₀, h₂ - h₀⟩ dA`.
    pub pairing_full: f64,
}

/// Compare `dVol_R/dt` with the boundary pairings for the family
/// `t ↦ (h₀(t), h₂(t))` over the flat unit torus. Both pairings are
/// reported; which one applies depends on the gauge of the family.
pub fn vol_r_derivative<F: Fn(f64) -> (Matrix2<f64>, Matrix2<f64>)>(
    family: F,
    t: f64,
    dt: f64,
    eps: &[f64],
) -> Result<VolRDerivative, Error> {
    let vol = |s: f64| {
        let (h0, h2) = family(s);
        product_slab_vol_r(&h0, &h2, eps).map(|r| r.a0)
    };
    let finite_difference = (vol(t + dt)? - vol(t - dt)?) / (2.0 * dt);
    let (h0, h2) = family(t);
    let (hp, _) = family(t + dt);
    let (hm, _) = family(t - dt);
    let hdot = (hp - hm) / (2.0 * dt);
    let inv = h0.try_inverse().ok_or(Error::InvalidInput("degenerate boundary metric"))?;
    let area = h0.determinant().sqrt();
    let pair = |b: Matrix2<f64>| -0.25 * (inv * hdot * inv * b).trace() * area;
    Ok(VolRDerivative {
        finite_difference,
        pairing_half: pair(h2 - h0 * 0.5),
        pairing_full: pair(h2 - h0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamilton_jacobi::FnData;
    use crate::numerics::geometric_sequence;

    fn poincare(y: &[f64; 2]) -> Matrix2<f64> {
        Matrix2::identity() / (y[1] * y[1])
    }

    #[test]
    fn hyperbolic_funnel_satisfies_the_constraints() {
        let g = ProductForm { h0: poincare, h2: |y: &[f64; 2]| poincare(y) * 0.5 };
        let c = expansion_checks(&g, [0.1, 1.3], &DEFAULT_HEIGHTS, 1e-2).unwrap();
        assert!((c.expansion.h2 - c.expansion.h0 * 0.5).amax() < 1e-9);
        assert!((c.scal + 2.0).abs() < 1e-6);
        assert!(c.trace < 1e-6 && c.divergence < 1e-5 && c.h4 < 1e-8, "{c:?}");
    }

    #[test]
    fn doubled_coefficient_violates_the_trace_constraint() {
        let g = ProductForm { h0: poincare, h2: poincare };
        let c = expansion_checks(&g, [0.0, 1.0], &DEFAULT_HEIGHTS, 1e-2).unwrap();
        assert!((c.trace - 1.0).abs() < 1e-6);
    }

    #[test]
    fn flat_torus_with_trace_free_h2() {
        let b = Matrix2::new(0.3, 0.2, 0.2, -0.3);
        let g = ProductForm { h0: |_: &[f64; 2]| Matrix2::identity(), h2: move |_: &[f64; 2]| b };
        let c = expansion_checks(&g, [0.3, 0.4], &DEFAULT_HEIGHTS, 1e-2).unwrap();
        assert!(c.scal.abs() < 1e-8 && c.trace < 1e-8 && c.divergence < 1e-8 && c.h4 < 1e-9);
    }

    fn check_epstein<F: Fn(f64, f64) -> (f64, f64, f64) + Copy>(phi: F, x: f64, y: f64) -> f64 {
        let m = EpsteinMetric::new(FnData(phi));
        let e = boundary_expansion(&m, [x, y], &DEFAULT_HEIGHTS).unwrap();
        assert!(e.normal_form_defect < 1e-8, "{e:?}");
        let expected = epstein_h2(|a, b| phi(a, b).0, x, y, 1e-3);
        let h0 = Matrix2::identity() * phi(x, y).0.exp();
        assert!((e.h0 - h0).amax() < 1e-8);
        (e.h2 - expected).amax()
    }

    #[test]
    fn epstein_fuchsian_gives_half_h0() {
        let phi = |_: f64, y: f64| (-2.0 * y.ln(), 0.0, -2.0 / y);
        assert!(check_epstein(phi, 0.2, 1.5) < 1e-6);
        let m = EpsteinMetric::new(FnData(phi));
        let e = boundary_expansion(&m, [0.0, 2.0], &DEFAULT_HEIGHTS).unwrap();
        assert!((e.h2 - e.h0 * 0.5).amax() < 1e-7);
    }

    #[test]
    fn epstein_strip_and_disk() {
        // J = e^z on the strip: φ = -2 log sin y.
        let strip = |_: f64, y: f64| (-2.0 * y.sin().ln(), 0.0, -2.0 / y.tan());
        assert!(check_epstein(strip, 0.1, 1.2) < 1e-6);
        // Poincare disk, the Moebius transport of the half-plane.
        let disk = |x: f64, y: f64| {
            let r2 = x * x + y * y;
            let q = 1.0 - r2;
            ((4.0 / (q * q)).ln(), 4.0 * x / q, 4.0 * y / q)
        };
        assert!(check_epstein(disk, 0.2, -0.3) < 1e-6);
    }

    #[test]
    fn epstein_flat_patch() {
        let flat = |x: f64, y: f64| (0.4 * x - 0.2 * y, 0.4, -0.2);
        let d = check_epstein(flat, 0.0, 0.0);
        assert!(d < 1e-6);
        // Harmonic φ: h₂ = Re(-½(∂φ)² dz²).
        let e = epstein_h2(|x, y| flat(x, y).0, 0.0, 0.0, 1e-3);
        let dphi = C64::new(0.2, 0.1);
        let q = -dphi * dphi * 0.5;
        assert!((e[(0, 0)] - q.re).abs() < 1e-9 && (e[(0, 1)] + q.im).abs() < 1e-9);
    }

    #[test]
    fn vol_r_derivative_on_trivial_families() {
        let eps = geometric_sequence(0.1, 0.5, 8);
        let constant = vol_r_derivative(|_| (Matrix2::identity(), Matrix2::zeros()), 0.0, 1e-3, &eps).unwrap();
        assert!(constant.finite_difference.abs() < 1e-8 && constant.pairing_half == 0.0);
        // Area-preserving flat deformation with h₂ = 0.
        let shear = |t: f64| {
            let a = 1.0 + t;
            (Matrix2::new(a, 0.0, 0.0, 1.0 / a), Matrix2::zeros())
        };
        let d = vol_r_derivative(shear, 0.2, 1e-3, &eps).unwrap();
        assert!(d.finite_difference.abs() < 1e-6);
        assert!(d.pairing_half.abs() < 1e-6 && d.pairing_full.abs() < 1e-6);
    }
}
