// SPDX-License-Identifier: MIT OR Apache-2.0

//! Regularized volumes on the collar of the cusp model.
//!
//! In blow-up coordinates `(U, v, w)` the model volume form is
//! `dU dv dw / (U³(1 - U²))` (see [`layer_antiderivative`]). For a
//! geodesic defining function `ρ = U e^{ω}`, the region `{ρ ≥ ε}` over a
//! column starts at the level `U*(ε)` solving `U e^{ω(U)} = ε`. Replacing
//! boundary data `φ₀` by `φ₀ + ψ` therefore changes the regularized volume
//! by `∫∫ A(U*₀) - A(U*_ψ) dv dw`, and the finite part of that difference
//! is compared with `-¼∫|dψ|²_{h_ℓ} + ½(1+ν²)∫ψ`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::cusp_model::{h_ell_dual, CuspParams, W_PERIOD};
use crate::hamilton_jacobi::{BoundaryData, CuspHamiltonian, InversionOptions, OmegaProfile};
use crate::numerics::quad::{uniform_breaks, GaussLegendre};
use crate::numerics::{geometric_sequence, pairwise_sum};
use crate::renvol::finite_part::{finite_part_fit_with, layer_antiderivative, FinitePartResult};
use crate::Error;

/// Perturbation `ψ = amp · β((v - center)/radius) · (1 + b cos(4πw + θ))`
/// with the smooth bump `β(t) = exp(1 - 1/(1 - t²))` on `|t| < 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarBump {
    /// Peak amplitude.
    pub amp: f64,
    /// Center in `v`.
    pub center: f64,
    /// Half-width in `v`.
    pub radius: f64,
    /// Relative amplitude of the `w` mode.
    pub b: f64,
    /// Phase of the `w` mode.
    pub theta: f64,
}

impl CollarBump {
    /// Support `[center - radius, center + radius]` in `v`.
    pub fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

impl BoundaryData for CollarBump {
    fn eval(&self, v: f64, w: f64) -> (f64, f64, f64) {
        let t = (v - self.center) / self.radius;
        if t.abs() >= 1.0 {
            return (0.0, 0.0, 0.0);
        }
        let q = 1.0 - t * t;
        let beta = (1.0 - 1.0 / q).exp();
        let dbeta = -2.0 * t / (q * q) * beta / self.radius;
        let (sn, cs) = (4.0 * PI * w + self.theta).sin_cos();
        let m = 1.0 + self.b * cs;
        (
            self.amp * beta * m,
            self.amp * dbeta * m,
            -4.0 * PI * self.amp * beta * self.b * sn,
        )
    }
}

/// Boundary data `c + data`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Offset<D>(pub f64, pub D);

impl<D: BoundaryData> BoundaryData for Offset<D> {
    fn eval(&self, y1: f64, y2: f64) -> (f64, f64, f64) {
        let (f, a, b) = self.1.eval(y1, y2);
        (self.0 + f, a, b)
    }
}

/// Tensor-product quadrature on `[v₀, v₁] × [0, 1/2)`: Gauss-Legendre
/// panels in `v`, the periodic trapezoid rule in `w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarQuadrature {
    /// Number of `v` panels.
    pub v_panels: usize,
    /// Gauss nodes per panel.
    pub v_nodes: usize,
    /// Trapezoid nodes in `w`.
    pub w_nodes: usize,
}

impl CollarQuadrature {
    /// `(v, w, weight)` triples.
    pub fn nodes(&self, v0: f64, v1: f64) -> Vec<(f64, f64, f64)> {
        let gl = GaussLegendre::new(self.v_nodes);
        let hw = W_PERIOD / self.w_nodes as f64;
        let mut out = Vec::new();
        for p in uniform_breaks(v0, v1, self.v_panels).windows(2) {
            let (vs, ws) = gl.mapped(p[0], p[1]);
            for (v, wv) in vs.iter().zip(&ws) {
                for k in 0..self.w_nodes {
                    out.push((*v, k as f64 * hw, wv * hw));
                }
            }
        }
        out
    }
}

/// `-¼∫|dψ|²_{h_ℓ} dv dw + ½(1+ν²)∫ψ dv dw`, the first-order-exact
/// change of the renormalized volume under `h_L -> e^{2ψ}h_L`.
pub fn variation_formula<D: BoundaryData>(ell: f64, nu: f64, psi: &D, v_range: (f64, f64), quad: &CollarQuadrature) -> f64 {
    let terms: Vec<f64> = quad
        .nodes(v_range.0, v_range.1)
        .iter()
        .map(|(v, w, wt)| {
            let (f, fv, fw) = psi.eval(*v, *w);
            let d = h_ell_dual(ell, nu, &[*v, *w]);
            let grad2 = d[(0, 0)] * fv * fv + 2.0 * d[(0, 1)] * fv * fw + d[(1, 1)] * fw * fw;
            wt * (-0.25 * grad2 + 0.5 * (1.0 + nu * nu) * f)
        })
        .collect();
    pairwise_sum(&terms)
}

/// Settings for [`variation_direct`].
#[derive(Debug, Clone, PartialEq)]
pub struct VariationSettings {
    /// Quadrature over the widened support.
    pub quad: CollarQuadrature,
    /// Widening of the `v` support on each side.
    pub margin: f64,
    /// Chebyshev levels per column.
    pub levels: usize,
    /// Top of the level interval.
    pub top: f64,
    /// Regularization parameters (geometric).
    pub eps: Vec<f64>,
    /// Extra powers in the finite-part basis.
    pub extra_powers: Vec<i32>,
    /// Flow-map inversion settings.
    pub inversion: InversionOptions,
}

impl Default for VariationSettings {
    fn default() -> Self {
        Self {
            quad: CollarQuadrature { v_panels: 6, v_nodes: 24, w_nodes: 8 },
            margin: 0.05,
            levels: 12,
            top: 0.03,
            eps: geometric_sequence(0.02, 0.5, 9),
            extra_powers: alloc::vec![2, 3],
            inversion: InversionOptions::default(),
        }
    }
}

/// Output of [`variation_direct`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirectVariation {
    /// `(ε, V_ψ(ε) - V₀(ε))`.
    pub samples: Vec<(f64, f64)>,
    /// Finite-part fit of the samples.
    pub fit: FinitePartResult,
}

/// Finite part of `V_{φ₀+ψ}(ε) - V_{φ₀}(ε)` over the collar, from HJ
/// solutions on every quadrature column. `ψ` must vanish outside
/// `v_support`.
pub fn variation_direct<D: BoundaryData>(
    params: &CuspParams,
    phi0: f64,
    psi: D,
    v_support: (f64, f64),
    settings: &VariationSettings,
) -> Result<DirectVariation, Error> {
    let ham = CuspHamiltonian::new(params);
    let base = crate::hamilton_jacobi::Constant(phi0);
    let pert = Offset(phi0, psi);
    let (v0, v1) = (v_support.0 - settings.margin, v_support.1 + settings.margin);
    if params.ell == 0.0 && v0 <= 0.0 && v1 >= 0.0 {
        return Err(Error::OutOfDomain("collar quadrature crosses v = 0 at ell = 0"));
    }
    let nodes = settings.quad.nodes(v0, v1);
    let mut sums = alloc::vec![Vec::with_capacity(nodes.len()); settings.eps.len()];
    let mut base_cache: Option<(f64, OmegaProfile)> = None;
    for (v, w, wt) in &nodes {
        let base_profile = match &base_cache {
            Some((bv, prof)) if bv == v => prof.clone(),
            _ => {
                let prof = OmegaProfile::solve(&ham, &base, [*v, 0.0], settings.top, settings.levels, &settings.inversion)?;
                base_cache = Some((*v, prof.clone()));
                prof
            }
        };
        let prof = OmegaProfile::solve(&ham, &pert, [*v, *w], settings.top, settings.levels, &settings.inversion)?;
        for (k, eps) in settings.eps.iter().enumerate() {
            let u0 = base_profile.level_of(*eps)?;
            let u1 = prof.level_of(*eps)?;
            sums[k].push(wt * (layer_antiderivative(u0) - layer_antiderivative(u1)));
        }
    }
    let samples: Vec<(f64, f64)> = settings
        .eps
        .iter()
        .zip(&sums)
        .map(|(e, s)| (*e, pairwise_sum(s)))
        .collect();
    let fit = finite_part_fit_with(&samples, &settings.extra_powers)?;
    Ok(DirectVariation { samples, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::diff::d1_richardson;

    fn bump() -> CollarBump {
        CollarBump { amp: 0.1, center: 0.4, radius: 0.25, b: 0.5, theta: 0.3 }
    }

    #[test]
    fn bump_gradient_is_consistent() {
        let p = bump();
        for (v, w) in [(0.3, 0.1), (0.55, 0.37), (0.2, 0.0)] {
            let (_, fv, fw) = p.eval(v, w);
            assert!((d1_richardson(|x| p.eval(x, w).0, v, 1e-3) - fv).abs() < 1e-8);
            assert!((d1_richardson(|y| p.eval(v, y).0, w, 1e-3) - fw).abs() < 1e-8);
        }
        assert_eq!(p.eval(0.66, 0.1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn constant_shift_on_area_a() {
        // psi = c on the whole quadrature box gives c A (1+ν²)/2; with the
        // h_L area (1+ν²)A this is the `cA/2` rule.
        struct C;
        impl BoundaryData for C {
            fn eval(&self, _: f64, _: f64) -> (f64, f64, f64) {
                (0.2, 0.0, 0.0)
            }
        }
        let q = CollarQuadrature { v_panels: 2, v_nodes: 6, w_nodes: 4 };
        let nu = 0.3;
        let got = variation_formula(0.5, nu, &C, (0.0, 1.0), &q);
        let area_hl = (1.0 + nu * nu) * 1.0 * W_PERIOD;
        assert!((got - 0.2 * area_hl / 2.0).abs() < 1e-13);
    }

    #[test]
    fn direct_variation_matches_formula() {
        let params = CuspParams::new(0.5, 0.4, 1.0).unwrap();
        let phi0 = 0.5 * (1.0 + 0.16f64).ln();
        let psi = bump();
        let quad = CollarQuadrature { v_panels: 8, v_nodes: 24, w_nodes: 8 };
        let formula = variation_formula(0.5, 0.4, &psi, psi.support(), &quad);
        let direct = variation_direct(&params, phi0, psi, psi.support(), &VariationSettings::default()).unwrap();
        let rel = (direct.fit.a0 - formula).abs() / formula.abs();
        assert!(rel < 1e-4, "direct {:?} formula {formula}", direct.fit);
    }
}
