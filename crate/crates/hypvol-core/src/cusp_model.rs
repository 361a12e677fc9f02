// SPDX-License-Identifier: MIT OR Apache-2.0

//! The model neighbourhood of a pinching geodesic.
//!
//! A point of the model is `(u, v, w)` with `ζ = v + iu` in the upper half
//! plane and `w ∈ ℝ/½ℤ`. The parameters `L = (ℓ, ν, λ)` are the translation
//! length, twist ratio and fixed-point scale of the loxodromic generator.
//!
//! The chain from half-space coordinates is
//!
//! ```text
//! (x, z) --Θ_L--> (x, z) --Υ_L--> (u', v', w) --Ξ_L--> (u, v, w)
//! ```
//!
//! where `Θ_L` moves the fixed points to `0, ∞`, `Υ_L` uses spherical
//! shells `r = e^{2ℓw}` with stereographic coordinates on each shell, and
//! `Ξ_L` undoes the twist by a hyperbolic rotation about `iℓ` of angle
//! `-2νℓw`.
//!
//! The rotation is written as `ζ = (cos a ζ' - ℓ sin a)/(ℓ^{-1} sin a ζ' + cos a)`
//! with `a = νℓw`, which conjugates the generator to `w ↦ w + ½`.

#[allow(unused_imports)]
use num_traits::Float;
use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64 as C64;

use crate::geometry::MetricPatch;
use crate::moebius::{HalfSpacePoint, MoebiusMap};
use crate::Error;

/// Parameters `L = (ℓ, ν, λ)` of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuspParams {
    /// Translation length, `ℓ >= 0`.
    pub ell: f64,
    /// Twist ratio.
    pub nu: f64,
    /// Fixed-point scale, `|p_+ - p_-| = λℓ`.
    pub lambda: f64,
}

impl CuspParams {
    /// Checked constructor.
    pub fn new(ell: f64, nu: f64, lambda: f64) -> Result<Self, Error> {
        if !(ell >= 0.0 && ell.is_finite()) {
            return Err(Error::OutOfDomain("ell must be finite and non-negative"));
        }
        if !nu.is_finite() {
            return Err(Error::OutOfDomain("nu must be finite"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::OutOfDomain("lambda must be positive"));
        }
        Ok(Self { ell, nu, lambda })
    }

    /// Complex multiplier `q = e^{ℓ(1 + iν)}`.
    pub fn q(&self) -> C64 {
        C64::new(self.ell, self.ell * self.nu).exp()
    }

    /// `R² = u² + v² + ℓ²`.
    pub fn r2(&self, u: f64, v: f64) -> f64 {
        u * u + v * v + self.ell * self.ell
    }
}

/// The model metric `g_L` at `x = [u, v, w]`.
pub fn g_l(p: &CuspParams, x: &[f64; 3]) -> Matrix3<f64> {
    let [u, v, _] = *x;
    let (nu, ell) = (p.nu, p.ell);
    let r2 = p.r2(u, v);
    let inv = 1.0 / (u * u);
    let gww = (1.0 + nu * nu) * r2 * r2 - 4.0 * nu * nu * ell * ell * u * u;
    let gvw = nu * (r2 - 2.0 * u * u);
    let guw = 2.0 * nu * u * v;
    Matrix3::new(
        inv, 0.0, guw * inv, //
        0.0, inv, gvw * inv, //
        guw * inv, gvw * inv, gww * inv,
    )
}

/// Inverse of `g_L`, in closed form.
pub fn g_l_dual(p: &CuspParams, x: &[f64; 3]) -> Matrix3<f64> {
    let [u, v, _] = *x;
    let nu = p.nu;
    let r2 = p.r2(u, v);
    let r4 = r2 * r2;
    let s = r2 - 2.0 * u * u;
    let m11 = r4 + 4.0 * nu * nu * u * u * v * v;
    let m12 = 2.0 * nu * nu * u * v * s;
    let m13 = -2.0 * nu * u * v;
    let m22 = r4 + nu * nu * s * s;
    let m23 = -nu * s;
    let f = u * u / r4;
    Matrix3::new(
        m11, m12, m13, //
        m12, m22, m23, //
        m13, m23, 1.0,
    ) * f
}

/// Riemannian volume density `sqrt(det g_L) = R²/u³`.
pub fn volume_density(p: &CuspParams, u: f64, v: f64) -> f64 {
    p.r2(u, v) / (u * u * u)
}

/// `g_L` as a metric patch on `u > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelMetric(pub CuspParams);

impl MetricPatch<3> for ModelMetric {
    fn metric(&self, x: &[f64; 3]) -> Matrix3<f64> {
        g_l(&self.0, x)
    }

    fn dual(&self, x: &[f64; 3]) -> Matrix3<f64> {
        g_l_dual(&self.0, x)
    }

    fn contains(&self, x: &[f64; 3]) -> bool {
        x[0] > 0.0
    }
}

/// The boundary metric `h_ℓ = dv²/(v²+ℓ²) + (1+ν²)(v²+ℓ²)dw² + 2ν dv dw`
/// at `y = [v, w]`; it has unit determinant.
pub fn h_ell(ell: f64, nu: f64, y: &[f64; 2]) -> Matrix2<f64> {
    let s = y[0] * y[0] + ell * ell;
    Matrix2::new(1.0 / s, nu, nu, (1.0 + nu * nu) * s)
}

/// Dual of [`h_ell`].
pub fn h_ell_dual(ell: f64, nu: f64, y: &[f64; 2]) -> Matrix2<f64> {
    let s = y[0] * y[0] + ell * ell;
    Matrix2::new((1.0 + nu * nu) * s, -nu, -nu, 1.0 / s)
}

/// Boundary metric on `(v, w)`; `hyperbolic` selects `h_L = (1+ν²) h_ℓ`,
/// which has curvature `-1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMetric {
    /// `ℓ`.
    pub ell: f64,
    /// `ν`.
    pub nu: f64,
    /// Use `h_L` instead of `h_ℓ`.
    pub hyperbolic: bool,
}

impl BoundaryMetric {
    /// `h_L`.
    pub fn h_l(ell: f64, nu: f64) -> Self {
        Self { ell, nu, hyperbolic: true }
    }

    /// `h_ℓ`.
    pub fn h_ell(ell: f64, nu: f64) -> Self {
        Self { ell, nu, hyperbolic: false }
    }

    fn factor(&self) -> f64 {
        if self.hyperbolic {
            1.0 + self.nu * self.nu
        } else {
            1.0
        }
    }
}

impl MetricPatch<2> for BoundaryMetric {
    fn metric(&self, y: &[f64; 2]) -> Matrix2<f64> {
        h_ell(self.ell, self.nu, y) * self.factor()
    }

    fn dual(&self, y: &[f64; 2]) -> Matrix2<f64> {
        h_ell_dual(self.ell, self.nu, y) / self.factor()
    }

    fn contains(&self, y: &[f64; 2]) -> bool {
        self.ell > 0.0 || y[0] != 0.0
    }
}

/// Half-space metric `(dx² + dz_1² + dz_2²)/x²` at `[x, z_1, z_2]`.
pub fn half_space_metric(x: &[f64; 3]) -> Matrix3<f64> {
    Matrix3::identity() / (x[0] * x[0])
}

/// `θ(z) = -z/(z - λℓ)`, which sends `0, λℓ` to `0, ∞`.
pub fn theta_moebius(p: &CuspParams) -> Result<MoebiusMap, Error> {
    MoebiusMap::real(-1.0, 0.0, 1.0, -p.lambda * p.ell)
}

/// Poincaré extension `Θ_L` of `θ`.
pub fn theta_l(p: &CuspParams, pt: &HalfSpacePoint) -> Result<HalfSpacePoint, Error> {
    if !(p.ell > 0.0) {
        return Err(Error::OutOfDomain("theta_l needs ell > 0"));
    }
    let a = p.lambda * p.ell;
    let (x, z) = (pt.x, pt.z);
    let den = (z - a).norm_sqr() + x * x;
    let zz = (-(x * x) - z.norm_sqr() + z * a) / den;
    HalfSpacePoint::new(x * a / den, zz)
}

/// Center `e` and radius `ρ` of the half-ball removed by `Θ_L` from the
/// image of `B(0, δ)`; exact, not only to leading order in `ℓ`.
pub fn image_ball(p: &CuspParams, delta: f64) -> Result<(f64, f64), Error> {
    let a = p.lambda * p.ell;
    let d2 = delta * delta;
    let gap = d2 - a * a;
    if !(delta > 0.0) || gap == 0.0 {
        return Err(Error::OutOfDomain("need delta > 0 and delta != lambda ell"));
    }
    Ok((-d2 / gap, delta * a / gap.abs()))
}

/// `Υ_L`: half-space point to `[u', v', w]`.
pub fn upsilon_l(ell: f64, pt: &HalfSpacePoint) -> Result<[f64; 3], Error> {
    if !(ell > 0.0) {
        return Err(Error::OutOfDomain("upsilon_l needs ell > 0"));
    }
    let r = (pt.x * pt.x + pt.z.norm_sqr()).sqrt();
    let (ox, o1, o2) = (pt.x / r, pt.z.re / r, pt.z.im / r);
    let den = 1.0 + o1;
    if !(den > 0.0) {
        return Err(Error::OutOfDomain("point on the projection ray"));
    }
    Ok([ell * ox / den, ell * o2 / den, r.ln() / (2.0 * ell)])
}

/// Inverse of [`upsilon_l`].
pub fn upsilon_l_inverse(ell: f64, y: &[f64; 3]) -> Result<HalfSpacePoint, Error> {
    if !(ell > 0.0) {
        return Err(Error::OutOfDomain("upsilon_l needs ell > 0"));
    }
    let (uh, vh) = (y[0] / ell, y[1] / ell);
    let s = uh * uh + vh * vh;
    let r = (2.0 * ell * y[2]).exp();
    let k = r / (1.0 + s);
    HalfSpacePoint::new(2.0 * uh * k, C64::new((1.0 - s) * k, 2.0 * vh * k))
}

/// `sin(νℓw)/ℓ`, continuous at `ℓ = 0`.
fn sin_over_ell(nu: f64, ell: f64, w: f64) -> f64 {
    let a = nu * ell * w;
    if a.abs() < 1e-4 {
        nu * w * (1.0 - a * a / 6.0 + a.powi(4) / 120.0)
    } else {
        a.sin() / ell
    }
}

/// Real Möbius coefficients `(a, b, c, d)` of `Ξ_L` at the given `w`.
fn xi_coefficients(p: &CuspParams, w: f64) -> (f64, f64, f64, f64) {
    let a = p.nu * p.ell * w;
    let (s, c) = a.sin_cos();
    (c, -p.ell * s, sin_over_ell(p.nu, p.ell, w), c)
}

fn apply_real(m: (f64, f64, f64, f64), z: C64) -> C64 {
    (z * m.0 + m.1) / (z * m.2 + m.3)
}

/// `Ξ_L`: `[u', v', w]` to `[u, v, w]`.
pub fn xi_l(p: &CuspParams, y: &[f64; 3]) -> [f64; 3] {
    let m = xi_coefficients(p, y[2]);
    let z = apply_real(m, C64::new(y[1], y[0]));
    [z.im, z.re, y[2]]
}

/// Inverse of [`xi_l`].
pub fn xi_l_inverse(p: &CuspParams, x: &[f64; 3]) -> [f64; 3] {
    let (a, b, c, d) = xi_coefficients(p, x[2]);
    let z = apply_real((d, -b, -c, a), C64::new(x[1], x[0]));
    [z.im, z.re, x[2]]
}

/// `Φ_L = Ξ_L ∘ Υ_L`.
pub fn phi_l(p: &CuspParams, pt: &HalfSpacePoint) -> Result<[f64; 3], Error> {
    Ok(xi_l(p, &upsilon_l(p.ell, pt)?))
}

/// Inverse of [`phi_l`].
pub fn phi_l_inverse(p: &CuspParams, x: &[f64; 3]) -> Result<HalfSpacePoint, Error> {
    upsilon_l_inverse(p.ell, &xi_l_inverse(p, x))
}

/// `Φ_L ∘ Θ_L`, the chart from the original half-space.
pub fn phi_theta(p: &CuspParams, pt: &HalfSpacePoint) -> Result<[f64; 3], Error> {
    phi_l(p, &theta_l(p, pt)?)
}

/// Geometry of the image of `B(0, δ)` in the `(u, v, w)` model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelRegion {
    /// Parameters.
    pub params: CuspParams,
    /// Radius of the neighbourhood in the original half-space.
    pub delta: f64,
}

impl ModelRegion {
    /// Requires `λ > δ` and `δ > λℓ`, so that the half-disc of every shell
    /// `|w| <= 1/4` is well defined.
    pub fn new(params: CuspParams, delta: f64) -> Result<Self, Error> {
        let a = params.lambda * params.ell;
        if !(delta > a) || !(params.lambda > delta) {
            return Err(Error::OutOfDomain("model region needs lambda ell < delta < lambda"));
        }
        Ok(Self { params, delta })
    }

    /// Radius `r_q(w)` of the half-disc in the `ζ'` plane, computed in a form
    /// that is uniform as `ℓ → 0`, where it tends to `(λ²/4δ² - w²)^{-1/2}`.
    pub fn r_q(&self, w: f64) -> Result<f64, Error> {
        let CuspParams { ell, lambda, .. } = self.params;
        let d2 = self.delta * self.delta;
        let gap = d2 - lambda * lambda * ell * ell;
        let growth = if ell == 0.0 { 2.0 * w } else { (2.0 * ell * w).exp_m1() / ell };
        // (e + s)/ℓ and ρ/ℓ
        let a = growth - lambda * lambda * ell / gap;
        let b = self.delta * lambda / gap;
        let s_minus_e = (2.0 * ell * w).exp() + d2 / gap;
        let rho = ell * b;
        let num = s_minus_e * s_minus_e - rho * rho;
        let den = b * b - a * a;
        if !(den > 0.0 && num > 0.0) {
            return Err(Error::OutOfDomain("shell does not meet the removed ball"));
        }
        Ok((num / den).sqrt())
    }

    /// Center `v_L(w)` and radius `τ_L(w)` of the half-disc in the `ζ` plane.
    pub fn disc(&self, w: f64) -> Result<(f64, f64), Error> {
        let r = self.r_q(w)?;
        let m = xi_coefficients(&self.params, w);
        let vp = (m.0 * r + m.1) / (m.2 * r + m.3);
        let vm = (-m.0 * r + m.1) / (-m.2 * r + m.3);
        if !(vp.is_finite() && vm.is_finite() && vp > vm) {
            return Err(Error::OutOfDomain("half-disc passes through infinity"));
        }
        Ok((0.5 * (vp + vm), 0.5 * (vp - vm)))
    }

    /// Whether `[u, v, w]` with `|w| <= 1/4` lies in the region.
    pub fn contains(&self, x: &[f64; 3]) -> bool {
        match self.disc(x[2]) {
            Ok((c, t)) => x[0] > 0.0 && C64::new(x[1] - c, x[0]).norm() < t,
            Err(_) => false,
        }
    }
}

/// The `ℓ = 0` straightening `(u, v, w) ↦ (u', v', w')` that turns `g_0` into
/// `(du'² + dv'² + (u'² + v'²)² dw'²)/u'²`.
pub fn straighten(nu: f64, x: &[f64; 3]) -> [f64; 3] {
    let [u, v, w] = *x;
    let n2 = 1.0 + nu * nu;
    let f = 1.0 - nu * nu * u * u / (u * u * n2 + v * v);
    [n2.powf(1.5) * u * f, n2 * v * f, w - nu / n2 * v / (v * v + u * u)]
}

/// Inverse of [`straighten`].
pub fn unstraighten(nu: f64, y: &[f64; 3]) -> [f64; 3] {
    let [up, vp, wp] = *y;
    let n2 = 1.0 + nu * nu;
    let s = up * up + vp * vp;
    let (xp, yp) = (up / s, -vp / s);
    let (x, yy) = (xp * n2.sqrt(), yp * n2);
    let w = wp - nu * yy / n2;
    let t = x * x + yy * yy;
    [x / t, -yy / t, w]
}

/// Blow-up coordinates `(U, V, w) = (u/R, v/R, w)`.
pub fn blowup(ell: f64, x: &[f64; 3]) -> [f64; 3] {
    let r = (x[0] * x[0] + x[1] * x[1] + ell * ell).sqrt();
    [x[0] / r, x[1] / r, x[2]]
}

/// `(u, v, w)` from `(U, v, w)` with `0 <= U < 1`.
pub fn from_u_coordinate(ell: f64, big_u: f64, v: f64, w: f64) -> [f64; 3] {
    let r = ((v * v + ell * ell) / (1.0 - big_u * big_u)).sqrt();
    [big_u * r, v, w]
}

/// `R` as a function of `(U, v)`.
pub fn radius_from_u(ell: f64, big_u: f64, v: f64) -> f64 {
    ((v * v + ell * ell) / (1.0 - big_u * big_u)).sqrt()
}

/// Period of the `w` circle.
pub const W_PERIOD: f64 = 0.5;

/// Reduce `w` to `[-1/4, 1/4)`.
pub fn reduce_w(w: f64) -> f64 {
    let r = w - W_PERIOD * (w / W_PERIOD + 0.5).floor();
    if r >= 0.25 {
        r - W_PERIOD
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{gaussian_curvature, jacobian, max_abs_diff, pullback, sectional_curvature, CurvatureFd};
    use proptest::prelude::*;

    fn params() -> CuspParams {
        CuspParams::new(0.3, 0.7, 1.3).unwrap()
    }

    fn pt(x: f64, a: f64, b: f64) -> HalfSpacePoint {
        HalfSpacePoint::new(x, C64::new(a, b)).unwrap()
    }

    #[test]
    fn dual_inverts_metric() {
        for p in [params(), CuspParams::new(0.0, -1.4, 1.0).unwrap()] {
            let x = [0.37, -0.21, 0.1];
            let e = g_l(&p, &x) * g_l_dual(&p, &x) - Matrix3::identity();
            assert!(e.abs().max() < 1e-12);
            let d = g_l(&p, &x).determinant().sqrt();
            assert!((d - volume_density(&p, x[0], x[1])).abs() < 1e-10 * d);
        }
    }

    #[test]
    fn boundary_metric_has_unit_determinant_and_curvature() {
        let fd = CurvatureFd::default();
        for (ell, nu, v) in [(0.3, 0.7, 0.2), (0.0, 0.5, 0.4), (0.0, 0.0, -0.3), (1.0, -2.0, 1.5)] {
            assert!((h_ell(ell, nu, &[v, 0.1]).determinant() - 1.0).abs() < 1e-13);
            let k = gaussian_curvature(&BoundaryMetric::h_l(ell, nu), &[v, 0.1], v.abs().max(ell), fd);
            assert!((k + 1.0).abs() < 1e-6, "{k}");
        }
    }

    #[test]
    fn model_metric_is_hyperbolic() {
        let fd = CurvatureFd::default();
        let m = ModelMetric(params());
        let x = [0.3, 0.2, 0.05];
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let k = sectional_curvature(&m, &x, i, j, 0.3, fd);
            assert!((k + 1.0).abs() < 1e-6, "{i}{j} {k}");
        }
    }

    #[test]
    fn theta_is_the_poincare_extension_of_theta() {
        let p = params();
        let m = theta_moebius(&p).unwrap();
        let a = pt(0.13, 0.05, -0.07);
        let b = theta_l(&p, &a).unwrap();
        let c = m.poincare_extension(&a);
        assert!((b.x - c.x).abs() < 1e-14 && (b.z - c.z).norm() < 1e-14);
        assert!(m.apply(C64::new(0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn image_ball_is_exact() {
        let p = CuspParams::new(0.05, 0.3, 1.1).unwrap();
        let delta = 0.2;
        let (e, rho) = image_ball(&p, delta).unwrap();
        let m = theta_moebius(&p).unwrap();
        let c = m.image_circle(&crate::moebius::Circle::new(C64::new(0.0, 0.0), delta).unwrap()).unwrap();
        assert!((c.center - C64::new(e, 0.0)).norm() < 1e-12);
        assert!((c.radius - rho).abs() < 1e-12);
    }

    #[test]
    fn upsilon_round_trip_and_metric() {
        let ell = 0.2;
        let a = pt(0.4, 0.7, -0.3);
        let y = upsilon_l(ell, &a).unwrap();
        let b = upsilon_l_inverse(ell, &y).unwrap();
        assert!((a.x - b.x).abs() < 1e-14 && (a.z - b.z).norm() < 1e-14);
        let flat = CuspParams::new(ell, 0.0, 1.0).unwrap();
        let j = jacobian(
            |q: &[f64; 3]| upsilon_l(ell, &pt(q[0], q[1], q[2])).unwrap(),
            &[a.x, a.z.re, a.z.im],
            1e-3,
        );
        let back = pullback(&j, &g_l(&flat, &y));
        assert!(max_abs_diff(&(back * a.x * a.x), &Matrix3::identity()) < 1e-8);
    }

    #[test]
    fn phi_pulls_back_to_half_space() {
        let p = params();
        let a = pt(0.4, 0.7, -0.3);
        let y = phi_l(&p, &a).unwrap();
        let j = jacobian(|q: &[f64; 3]| phi_l(&p, &pt(q[0], q[1], q[2])).unwrap(), &[a.x, a.z.re, a.z.im], 1e-3);
        let back = pullback(&j, &g_l(&p, &y));
        assert!(max_abs_diff(&(back * a.x * a.x), &Matrix3::identity()) < 1e-8);
    }

    #[test]
    fn generator_becomes_translation() {
        let p = params();
        let m = MoebiusMap::dilation(p.q()).unwrap();
        for a in [pt(0.4, 0.7, -0.3), pt(0.1, -0.2, 0.5)] {
            let y0 = phi_l(&p, &a).unwrap();
            let y1 = phi_l(&p, &m.poincare_extension(&a)).unwrap();
            assert!((y1[0] - y0[0]).abs() < 1e-12 && (y1[1] - y0[1]).abs() < 1e-12);
            assert!((y1[2] - y0[2] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn xi_limit_at_zero_length() {
        let p = CuspParams::new(0.0, 0.8, 1.0).unwrap();
        let z = C64::new(0.3, 0.2);
        let w = 0.17;
        let y = xi_l(&p, &[z.im, z.re, w]);
        let expect = z / (z * (p.nu * w) + 1.0);
        assert!((C64::new(y[1], y[0]) - expect).norm() < 1e-15);
    }

    #[test]
    fn disc_converges_as_ell_shrinks() {
        let (nu, lambda, delta) = (0.6, 1.0, 0.25);
        let lim = ModelRegion::new(CuspParams::new(0.0, nu, lambda).unwrap(), delta).unwrap();
        let (c0, t0) = lim.disc(0.0).unwrap();
        assert!(c0.abs() < 1e-15 && (t0 - 2.0 * delta / lambda).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for k in 1..6 {
            let ell = 0.1 / 4f64.powi(k);
            let r = ModelRegion::new(CuspParams::new(ell, nu, lambda).unwrap(), delta).unwrap();
            let err = [-0.2, 0.0, 0.2]
                .iter()
                .map(|&w| {
                    let (a, b) = r.disc(w).unwrap();
                    let (c, d) = lim.disc(w).unwrap();
                    (a - c).abs().max((b - d).abs())
                })
                .fold(0.0, f64::max);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn disc_matches_shell_geometry() {
        // Points of the sphere |(x,z) - e| = ρ on the shell r = e^{2ℓw} land on
        // the half-circle |ζ - v_L| = τ_L.
        let p = CuspParams::new(0.08, 0.5, 1.2).unwrap();
        let delta = 0.3;
        let reg = ModelRegion::new(p, delta).unwrap();
        let (e, rho) = image_ball(&p, delta).unwrap();
        let w = 0.11;
        let s = (2.0 * p.ell * w).exp();
        let kappa = (e * e + s * s - rho * rho) / (2.0 * e);
        let h = (s * s - kappa * kappa).sqrt();
        let (c, t) = reg.disc(w).unwrap();
        for th in [0.3, 1.0, 2.5] {
            let a = pt(h * f64::sin(th), kappa, h * f64::cos(th));
            let y = phi_l(&p, &a).unwrap();
            assert!((y[2] - w).abs() < 1e-12);
            assert!((C64::new(y[1] - c, y[0]).norm() - t).abs() < 1e-10);
        }
    }

    #[test]
    fn straightening_matches_inversion_route() {
        let nu = 0.9;
        let x = [0.3, -0.4, 0.1];
        let y = straighten(nu, &x);
        let back = unstraighten(nu, &y);
        for k in 0..3 {
            assert!((back[k] - x[k]).abs() < 1e-13);
        }
        let g0 = g_l(&CuspParams::new(0.0, nu, 1.0).unwrap(), &x);
        let flat = g_l(&CuspParams::new(0.0, 0.0, 1.0).unwrap(), &y);
        let j = jacobian(|q: &[f64; 3]| straighten(nu, q), &x, 1e-4);
        assert!(max_abs_diff(&(pullback(&j, &flat) * x[0] * x[0]), &(g0 * x[0] * x[0])) < 1e-8);
    }

    #[test]
    fn blowup_round_trip() {
        let ell = 0.1;
        let x = [0.2, -0.3, 0.1];
        let b = blowup(ell, &x);
        let y = from_u_coordinate(ell, b[0], x[1], x[2]);
        assert!((y[0] - x[0]).abs() < 1e-15);
        assert!((radius_from_u(ell, b[0], x[1]) - p_r(ell, &x)).abs() < 1e-15);
        assert_eq!(reduce_w(0.3), -0.2);
        assert_eq!(reduce_w(-0.25), -0.25);
    }

    fn p_r(ell: f64, x: &[f64; 3]) -> f64 {
        (x[0] * x[0] + x[1] * x[1] + ell * ell).sqrt()
    }

    proptest! {
        #[test]
        fn xi_round_trip(ell in 0.0..0.5f64, nu in -3.0..3.0f64, u in 0.01..1.0f64, v in -1.0..1.0f64, w in -0.25..0.25f64) {
            let p = CuspParams::new(ell, nu, 1.0).unwrap();
            let y = xi_l_inverse(&p, &xi_l(&p, &[u, v, w]));
            prop_assert!((y[0] - u).abs() < 1e-11 * (1.0 + u) && (y[1] - v).abs() < 1e-11 * (1.0 + v.abs()));
        }

        #[test]
        fn xi_preserves_distance_to_core(ell in 0.01..0.5f64, nu in -3.0..3.0f64, u in 0.01..1.0f64, v in -1.0..1.0f64, w in -0.25..0.25f64) {
            let p = CuspParams::new(ell, nu, 1.0).unwrap();
            let y = xi_l(&p, &[u, v, w]);
            let before = (u * u + v * v + ell * ell) / u;
            let after = (y[0] * y[0] + y[1] * y[1] + ell * ell) / y[0];
            prop_assert!((before - after).abs() < 1e-10 * before);
        }

        #[test]
        fn phi_round_trip(ell in 0.01..0.5f64, nu in -2.0..2.0f64, x in 0.05..1.0f64, a in -1.0..1.0f64, b in -1.0..1.0f64) {
            let p = CuspParams::new(ell, nu, 1.0).unwrap();
            let q = pt(x, a, b);
            let y = phi_l(&p, &q).unwrap();
            let back = phi_l_inverse(&p, &y).unwrap();
            prop_assert!((back.x - q.x).abs() < 1e-10 && (back.z - q.z).norm() < 1e-10);
        }
    }
}
