// SPDX-License-Identifier: MIT OR Apache-2.0

//! PSL2(C) acting on the Riemann sphere and on upper half-space.
//!
//! Square roots of `tr^2 - 4` use the principal branch on `C \ R_-`; on the
//! negative real axis the branch `+i sqrt|.|` is taken (a signed zero in the
//! imaginary part is ignored). Fixed points are labelled by the size of the
//! derivative: `p_plus` is attractive, `p_minus` repulsive.

#[allow(unused_imports)]
use num_traits::Float;
use core::f64::consts::TAU;
use core::ops::Mul;

use num_complex::Complex64 as C64;
use num_traits::Zero;

use crate::Error;

/// Tolerance on `|tr^2 - 4|` for declaring a map parabolic.
pub const PARABOLIC_TOL: f64 = 1e-10;
/// Tolerance on derivative moduli when labelling fixed points.
pub const ATTRACT_TOL: f64 = 1e-10;

/// A point of the Riemann sphere `C ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPoint {
    /// A finite point.
    Finite(C64),
    /// The point at infinity.
    Infinity,
}

impl BoundaryPoint {
    /// The finite value, or [`Error::FixedPointAtInfinity`].
    pub fn finite(self) -> Result<C64, Error> {
        match self {
            BoundaryPoint::Finite(z) => Ok(z),
            BoundaryPoint::Infinity => Err(Error::FixedPointAtInfinity),
        }
    }
}

/// A point `(x, z)` of upper half-space, `x > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpacePoint {
    /// Height above the boundary plane.
    pub x: f64,
    /// Horizontal coordinate.
    pub z: C64,
}

impl HalfSpacePoint {
    /// Checked constructor.
    pub fn new(x: f64, z: C64) -> Result<Self, Error> {
        if x > 0.0 && x.is_finite() && z.re.is_finite() && z.im.is_finite() {
            Ok(Self { x, z })
        } else {
            Err(Error::OutOfDomain("half-space points need x > 0"))
        }
    }

    /// Hyperbolic distance for the metric `(dx^2 + |dz|^2) / x^2`.
    pub fn distance(&self, other: &Self) -> f64 {
        let dz = (self.z - other.z).norm_sqr();
        let dx = self.x - other.x;
        let chord = (dz + dx * dx).sqrt() / (2.0 * (self.x * other.x).sqrt());
        2.0 * chord.asinh()
    }

    /// Euclidean distance to the origin, `sqrt(x^2 + |z|^2)`.
    pub fn radius(&self) -> f64 {
        (self.x * self.x + self.z.norm_sqr()).sqrt()
    }
}

/// A Euclidean circle in the boundary plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    /// Center.
    pub center: C64,
    /// Radius, positive.
    pub radius: f64,
}

impl Circle {
    /// Checked constructor.
    pub fn new(center: C64, radius: f64) -> Result<Self, Error> {
        if radius > 0.0 && radius.is_finite() {
            Ok(Self { center, radius })
        } else {
            Err(Error::InvalidInput("circle radius must be positive"))
        }
    }

    /// Center distance minus the sum of radii. Positive when the closed
    /// disks are disjoint, zero when tangent.
    pub fn gap(&self, other: &Circle) -> f64 {
        (self.center - other.center).norm() - self.radius - other.radius
    }

    /// Whether `z` lies in the open disk.
    pub fn contains(&self, z: C64) -> bool {
        (z - self.center).norm() < self.radius
    }

    /// `n` equally spaced points on the circle, starting at angle `phase`.
    pub fn sample(&self, n: usize, phase: f64) -> impl Iterator<Item = C64> + '_ {
        (0..n).map(move |k| {
            let t = phase + TAU * k as f64 / n as f64;
            self.center + C64::from_polar(self.radius, t)
        })
    }
}

/// Conjugacy type of a Moebius map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoebiusKind {
    /// `±Id`.
    Identity,
    /// One fixed point, `tr^2 = 4`.
    Parabolic,
    /// `tr^2 ∈ [0, 4)`.
    Elliptic,
    /// `tr^2 ∉ [0, 4]`.
    Loxodromic,
}

impl MoebiusKind {
    /// Lower-case name.
    pub fn name(self) -> &'static str {
        match self {
            MoebiusKind::Identity => "identity",
            MoebiusKind::Parabolic => "parabolic",
            MoebiusKind::Elliptic => "elliptic",
            MoebiusKind::Loxodromic => "loxodromic",
        }
    }
}

/// Multiplier `q = e^{ℓ + iα}` of a loxodromic map, `|q| > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplier {
    /// `log |q| > 0`.
    pub ell: f64,
    /// `arg q ∈ [0, 2π)`.
    pub alpha: f64,
}

impl Multiplier {
    /// Complex value of the multiplier.
    pub fn q(&self) -> C64 {
        C64::from_polar(self.ell.exp(), self.alpha)
    }

    /// Twist ratio `ν = α / ℓ` with `α` taken in `(-π, π]`.
    pub fn nu(&self) -> f64 {
        let a = if self.alpha > core::f64::consts::PI {
            self.alpha - TAU
        } else {
            self.alpha
        };
        a / self.ell
    }
}

/// Element of PSL2(C), stored with determinant one.
#[derive(Debug, Clone, Copy)]
pub struct MoebiusMap {
    /// Entry (1,1).
    pub a: C64,
    /// Entry (1,2).
    pub b: C64,
    /// Entry (2,1).
    pub c: C64,
    /// Entry (2,2).
    pub d: C64,
}

/// Square root with the documented branch.
fn branch_sqrt(w: C64) -> C64 {
    let w = if w.im == 0.0 { C64::new(w.re, 0.0) } else { w };
    w.sqrt()
}

impl PartialEq for MoebiusMap {
    fn eq(&self, other: &Self) -> bool {
        self.distance(other) < 1e-12
    }
}

impl Mul for MoebiusMap {
    type Output = MoebiusMap;
    fn mul(self, r: MoebiusMap) -> MoebiusMap {
        MoebiusMap {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

impl MoebiusMap {
    /// Build from entries, rescaling so that `ad - bc = 1`.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self, Error> {
        let det = a * d - b * c;
        if !(det.norm() > 1e-300) || !det.re.is_finite() || !det.im.is_finite() {
            return Err(Error::InvalidInput("Moebius matrix is singular"));
        }
        let s = det.sqrt();
        Ok(Self {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    /// Build from real entries.
    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Result<Self, Error> {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    /// The identity.
    pub fn identity() -> Self {
        Self {
            a: C64::new(1.0, 0.0),
            b: C64::zero(),
            c: C64::zero(),
            d: C64::new(1.0, 0.0),
        }
    }

    /// `z ↦ q z`.
    pub fn dilation(q: C64) -> Result<Self, Error> {
        Self::new(q, C64::zero(), C64::zero(), C64::new(1.0, 0.0))
    }

    /// `z ↦ z + t`.
    pub fn translation(t: C64) -> Self {
        Self {
            a: C64::new(1.0, 0.0),
            b: t,
            c: C64::zero(),
            d: C64::new(1.0, 0.0),
        }
    }

    /// Loxodromic map with repulsive fixed point `p_minus`, attractive
    /// fixed point `p_plus` and multiplier `q` (`|q| > 1`).
    pub fn from_fixed_points(p_minus: C64, p_plus: C64, q: C64) -> Result<Self, Error> {
        if q.norm() <= 1.0 {
            return Err(Error::InvalidInput("multiplier must satisfy |q| > 1"));
        }
        let t = Self::new(p_plus, p_minus, C64::new(1.0, 0.0), C64::new(1.0, 0.0))?;
        Ok(t * Self::dilation(q)? * t.inverse())
    }

    /// Parabolic map `1/(γz - p) = 1/(z - p) + c` fixing `p`.
    pub fn parabolic(p: C64, c: C64) -> Self {
        let one = C64::new(1.0, 0.0);
        Self {
            a: one + p * c,
            b: -p * p * c,
            c,
            d: one - p * c,
        }
    }

    /// Inverse map.
    pub fn inverse(&self) -> Self {
        Self {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// Entrywise distance modulo sign.
    pub fn distance(&self, other: &Self) -> f64 {
        let plus = [
            self.a - other.a,
            self.b - other.b,
            self.c - other.c,
            self.d - other.d,
        ];
        let minus = [
            self.a + other.a,
            self.b + other.b,
            self.c + other.c,
            self.d + other.d,
        ];
        let m = |v: [C64; 4]| v.iter().fold(0.0f64, |acc, e| acc.max(e.norm()));
        m(plus).min(m(minus))
    }

    /// Trace `a + d` (defined up to sign).
    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    /// Conjugacy type.
    pub fn classify(&self) -> MoebiusKind {
        let t2 = self.trace() * self.trace();
        if (t2 - 4.0).norm() < PARABOLIC_TOL {
            if self.distance(&Self::identity()) < PARABOLIC_TOL {
                return MoebiusKind::Identity;
            }
            return MoebiusKind::Parabolic;
        }
        if t2.im.abs() <= 1e-14 * (1.0 + t2.re.abs()) && t2.re >= 0.0 && t2.re < 4.0 {
            MoebiusKind::Elliptic
        } else {
            MoebiusKind::Loxodromic
        }
    }

    /// Action on a finite point that is not the pole.
    pub fn apply(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Action on the Riemann sphere.
    pub fn apply_point(&self, p: BoundaryPoint) -> BoundaryPoint {
        match p {
            BoundaryPoint::Infinity => {
                if self.c.norm() == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite(self.a / self.c)
                }
            }
            BoundaryPoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den.norm() == 0.0 {
                    BoundaryPoint::Infinity
                } else {
                    BoundaryPoint::Finite((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Complex derivative `1 / (cz + d)^2`.
    pub fn derivative(&self, z: C64) -> C64 {
        let den = self.c * z + self.d;
        (den * den).inv()
    }

    /// `|M'(p)|`, read in the chart `1/z` when `p = ∞`.
    fn derivative_modulus(&self, p: BoundaryPoint) -> f64 {
        match p {
            BoundaryPoint::Finite(z) => self.derivative(z).norm(),
            // In the chart ζ = 1/z at a fixed point ∞ (so c = 0) the map is
            // ζ ↦ (d/a) ζ + ..., with modulus |d/a| = |d|^2.
            BoundaryPoint::Infinity => self.d.norm_sqr(),
        }
    }

    /// Attractive and repulsive fixed points `(p_plus, p_minus)`.
    pub fn fixed_points(&self) -> Result<(BoundaryPoint, BoundaryPoint), Error> {
        let kind = self.classify();
        if matches!(kind, MoebiusKind::Identity | MoebiusKind::Elliptic) {
            return Err(Error::WrongKind {
                found: kind.name(),
                expected: "loxodromic or parabolic",
            });
        }
        let scale = self.a.norm().max(self.d.norm()).max(self.b.norm()).max(1.0);
        let (p1, p2) = if self.c.norm() <= 1e-15 * scale {
            if kind == MoebiusKind::Parabolic {
                return Ok((BoundaryPoint::Infinity, BoundaryPoint::Infinity));
            }
            (BoundaryPoint::Infinity, BoundaryPoint::Finite(self.b / (self.d - self.a)))
        } else {
            let s = if kind == MoebiusKind::Parabolic {
                C64::zero()
            } else {
                branch_sqrt(self.trace() * self.trace() - 4.0)
            };
            let two_c = self.c * 2.0;
            (
                BoundaryPoint::Finite((self.a - self.d + s) / two_c),
                BoundaryPoint::Finite((self.a - self.d - s) / two_c),
            )
        };
        if kind == MoebiusKind::Parabolic {
            return Ok((p1, p1));
        }
        let (m1, m2) = (self.derivative_modulus(p1), self.derivative_modulus(p2));
        if (m1 - m2).abs() <= ATTRACT_TOL * (m1 + m2) {
            return Err(Error::WrongKind {
                found: "elliptic",
                expected: "loxodromic",
            });
        }
        Ok(if m1 < m2 { (p1, p2) } else { (p2, p1) })
    }

    /// Multiplier `q` with `|q| > 1`.
    pub fn multiplier(&self) -> Result<Multiplier, Error> {
        let kind = self.classify();
        if kind != MoebiusKind::Loxodromic {
            return Err(Error::WrongKind {
                found: kind.name(),
                expected: "loxodromic",
            });
        }
        let tr = self.trace();
        let lam = (tr + branch_sqrt(tr * tr - 4.0)) * 0.5;
        let mut q = lam * lam;
        if q.norm() < 1.0 {
            q = q.inv();
        }
        let mut alpha = q.arg();
        if alpha < 0.0 {
            alpha += TAU;
        }
        if alpha >= TAU {
            alpha -= TAU;
        }
        Ok(Multiplier {
            ell: q.norm().ln(),
            alpha,
        })
    }

    /// `|p_+ - p_-| = |tr^2 - 4|^{1/2} / |c|`; infinite when `c = 0`.
    pub fn fixed_point_distance(&self) -> f64 {
        let t2 = self.trace() * self.trace();
        let num = (t2 - 4.0).norm().sqrt();
        if self.c.norm() == 0.0 {
            if num == 0.0 {
                return 0.0;
            }
            return f64::INFINITY;
        }
        num / self.c.norm()
    }

    /// Canonical circles `(C_-, C_+)`: the images of `|z| = e^{∓ℓ/2}` under
    /// the normalizing map sending `0, ∞` to `p_-, p_+`. The map sends the
    /// exterior of the `C_-` disk onto the `C_+` disk.
    pub fn canonical_circles(&self) -> Result<(Circle, Circle), Error> {
        let m = self.multiplier()?;
        let (pp, pm) = self.fixed_points()?;
        canonical_circles_from(pm.finite()?, pp.finite()?, m.ell)
    }

    /// Poincare extension to upper half-space.
    pub fn poincare_extension(&self, p: &HalfSpacePoint) -> HalfSpacePoint {
        let czd = self.c * p.z + self.d;
        let x2 = p.x * p.x;
        let den = czd.norm_sqr() + self.c.norm_sqr() * x2;
        let z = ((self.a * p.z + self.b) * czd.conj() + self.a * self.c.conj() * x2) / den;
        HalfSpacePoint { x: p.x / den, z }
    }

    /// Image of a circle, or `None` when the circle passes through the pole.
    pub fn image_circle(&self, c: &Circle) -> Option<Circle> {
        let pts: [C64; 3] = core::array::from_fn(|k| {
            c.center + C64::from_polar(c.radius, TAU * k as f64 / 3.0 + 0.1)
        });
        let img: [C64; 3] = core::array::from_fn(|k| self.apply(pts[k]));
        circumcircle(img[0], img[1], img[2])
    }
}

/// Canonical circles for fixed points `p_-`, `p_+` and translation length
/// `ell`: centers `p_± ± (p_+ - p_-)/(e^ℓ - 1)`, common radius
/// `|p_+ - p_-| / (2 sinh(ℓ/2))`.
pub fn canonical_circles_from(p_minus: C64, p_plus: C64, ell: f64) -> Result<(Circle, Circle), Error> {
    if !(ell > 0.0) {
        return Err(Error::InvalidInput("canonical circles need ell > 0"));
    }
    let d = p_plus - p_minus;
    let k = 1.0 / ell.exp_m1();
    let r = d.norm() / (2.0 * (0.5 * ell).sinh());
    Ok((
        Circle::new(p_minus - d * k, r)?,
        Circle::new(p_plus + d * k, r)?,
    ))
}

/// Circle through three points, `None` if they are collinear or not finite.
pub fn circumcircle(a: C64, b: C64, c: C64) -> Option<Circle> {
    let (b1, c1) = (b - a, c - a);
    let det = 2.0 * (b1.re * c1.im - b1.im * c1.re);
    if !(det.abs() > 1e-300) {
        return None;
    }
    let (nb, nc) = (b1.norm_sqr(), c1.norm_sqr());
    let ux = (c1.im * nb - b1.im * nc) / det;
    let uy = (b1.re * nc - c1.re * nb) / det;
    let center = a + C64::new(ux, uy);
    let radius = C64::new(ux, uy).norm();
    if radius.is_finite() && radius > 0.0 {
        Some(Circle { center, radius })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn classification_examples() {
        assert_eq!(MoebiusMap::identity().classify(), MoebiusKind::Identity);
        let t = MoebiusMap::translation(c(1.0, 0.0));
        assert_eq!(t.classify(), MoebiusKind::Parabolic);
        let m = MoebiusMap::real(2.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(m.classify(), MoebiusKind::Loxodromic);
        assert!((m.trace().re - 3.0).abs() < 1e-15);
        let rot = MoebiusMap::dilation(C64::from_polar(1.0, 0.7)).unwrap();
        assert_eq!(rot.classify(), MoebiusKind::Elliptic);
    }

    #[test]
    fn fixed_points_of_2111() {
        let m = MoebiusMap::real(2.0, 1.0, 1.0, 1.0).unwrap();
        let (pp, pm) = m.fixed_points().unwrap();
        let (pp, pm) = (pp.finite().unwrap(), pm.finite().unwrap());
        let s5 = 5f64.sqrt();
        assert!((pp - c((1.0 + s5) / 2.0, 0.0)).norm() < 1e-12);
        assert!((pm - c((1.0 - s5) / 2.0, 0.0)).norm() < 1e-12);
        assert!(m.derivative(pp).norm() < 1.0 && m.derivative(pm).norm() > 1.0);
        assert!((m.fixed_point_distance() - s5).abs() < 1e-12);
        let mult = m.multiplier().unwrap();
        let q = ((3.0 + s5) / 2.0).powi(2);
        assert!((mult.ell - q.ln()).abs() < 1e-12);
        assert!(mult.ell > 1.9247 && mult.ell < 1.9249);
        assert!(mult.alpha.abs() < 1e-12);
    }

    #[test]
    fn dilation_and_parabolic_fixed_points() {
        let m = MoebiusMap::dilation(c(4.0, 0.0)).unwrap();
        let (pp, pm) = m.fixed_points().unwrap();
        assert_eq!(pp, BoundaryPoint::Infinity);
        assert_eq!(pm, BoundaryPoint::Finite(c(0.0, 0.0)));
        let mult = m.multiplier().unwrap();
        assert!((mult.ell - 4f64.ln()).abs() < 1e-14 && mult.alpha == 0.0);
        let e = MoebiusMap::dilation(C64::from_polar(1f64.exp(), 1.0)).unwrap();
        let mult = e.multiplier().unwrap();
        assert!((mult.ell - 1.0).abs() < 1e-14 && (mult.alpha - 1.0).abs() < 1e-14);
        let p = MoebiusMap::parabolic(c(0.0, 0.0), c(0.5, 0.2));
        let (a, b) = p.fixed_points().unwrap();
        assert_eq!(a, b);
        assert!(a.finite().unwrap().norm() < 1e-15);
        assert_eq!(MoebiusMap::translation(c(0.0, 1.0)).fixed_point_distance(), 0.0);
        assert_eq!(m.fixed_point_distance(), f64::INFINITY);
    }

    #[test]
    fn elliptic_inputs_are_rejected() {
        let rot = MoebiusMap::dilation(C64::from_polar(1.0, 0.7)).unwrap();
        assert!(rot.fixed_points().is_err());
        assert!(rot.multiplier().is_err());
        assert!(MoebiusMap::translation(c(1.0, 0.0)).canonical_circles().is_err());
    }

    #[test]
    fn canonical_circle_example() {
        let m = MoebiusMap::from_fixed_points(c(0.0, 0.0), c(1.0, 0.0), c(1f64.exp(), 0.0)).unwrap();
        let (cm, cp) = m.canonical_circles().unwrap();
        assert!((cm.center - c(-0.5820, 0.0)).norm() < 1e-4);
        assert!((cp.center - c(1.5820, 0.0)).norm() < 1e-4);
        assert!((cm.radius - 0.9595).abs() < 1e-4 && (cp.radius - cm.radius).abs() < 1e-15);
    }

    #[test]
    fn canonical_circles_shrink_for_large_ell() {
        let (cm, cp) = canonical_circles_from(c(0.0, 0.0), c(1.0, 0.0), 40.0).unwrap();
        assert!(cm.radius < 1e-8 && cp.radius < 1e-8);
        assert!(cm.center.norm() < 1e-8 && (cp.center - 1.0).norm() < 1e-8);
    }

    #[test]
    fn poincare_extension_examples() {
        let p = HalfSpacePoint::new(0.7, c(0.2, -0.4)).unwrap();
        let id = MoebiusMap::identity().poincare_extension(&p);
        assert!((id.x - p.x).abs() < 1e-15 && (id.z - p.z).norm() < 1e-15);
        let q = c(2.0, 1.0);
        let d = MoebiusMap::dilation(q).unwrap().poincare_extension(&p);
        assert!((d.x - q.norm() * p.x).abs() < 1e-14 && (d.z - q * p.z).norm() < 1e-14);
        let t = MoebiusMap::translation(c(3.0, 1.0)).poincare_extension(&p);
        assert!((t.x - p.x).abs() < 1e-15 && (t.z - p.z - c(3.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn degenerating_circles_become_tangent() {
        // p_± = p ± ℓ m / 2 with m = (1 + iν)/c.
        let (p, cc, nu) = (c(0.3, -0.2), c(1.2, 0.5), 0.7);
        let m = c(1.0, nu) / cc;
        let ell = 1e-7;
        let (cm, cp) = canonical_circles_from(p - m * (0.5 * ell), p + m * (0.5 * ell), ell).unwrap();
        assert!((cp.center - (p + m)).norm() < 1e-6);
        assert!((cm.center - (p - m)).norm() < 1e-6);
        assert!((cp.radius - (1.0 + nu * nu).sqrt() / cc.norm()).abs() < 1e-6);
        assert!(cm.gap(&cp).abs() < 1e-6);
    }

    fn arb_c() -> impl Strategy<Value = C64> {
        (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(a, b)| C64::new(a, b))
    }

    fn arb_map() -> impl Strategy<Value = MoebiusMap> {
        (arb_c(), arb_c(), arb_c(), arb_c())
            .prop_filter_map("singular", |(a, b, c, d)| {
                let det = a * d - b * c;
                if det.norm() > 0.1 {
                    MoebiusMap::new(a, b, c, d).ok()
                } else {
                    None
                }
            })
    }

    fn arb_point() -> impl Strategy<Value = HalfSpacePoint> {
        (0.05..3.0f64, arb_c()).prop_map(|(x, z)| HalfSpacePoint { x, z })
    }

    proptest! {
        #[test]
        fn determinant_is_normalized(m in arb_map()) {
            prop_assert!((m.a * m.d - m.b * m.c - 1.0).norm() < 1e-12);
        }

        #[test]
        fn extension_is_an_isometry(m in arb_map(), p in arb_point(), q in arb_point()) {
            let d0 = p.distance(&q);
            let d1 = m.poincare_extension(&p).distance(&m.poincare_extension(&q));
            prop_assert!((d0 - d1).abs() < 1e-10 * (1.0 + d0));
        }

        #[test]
        fn extension_matches_boundary_action(m in arb_map(), z in arb_c()) {
            let den = (m.c * z + m.d).norm();
            prop_assume!(den > 0.1);
            let p = HalfSpacePoint { x: 1e-9, z };
            let img = m.poincare_extension(&p);
            prop_assert!((img.z - m.apply(z)).norm() < 1e-6);
        }

        #[test]
        fn fixed_points_and_reconstruction(
            pm in arb_c(), dp in arb_c(), ell in 0.05..4.0f64, alpha in 0.0..core::f64::consts::TAU
        ) {
            prop_assume!(dp.norm() > 0.05);
            let q = C64::from_polar(ell.exp(), alpha);
            let m = MoebiusMap::from_fixed_points(pm, pm + dp, q).unwrap();
            prop_assert_eq!(m.classify(), MoebiusKind::Loxodromic);
            let (a, r) = m.fixed_points().unwrap();
            let (a, r) = (a.finite().unwrap(), r.finite().unwrap());
            prop_assert!((m.apply(a) - a).norm() < 1e-10 * (1.0 + a.norm()));
            prop_assert!((m.apply(r) - r).norm() < 1e-10 * (1.0 + r.norm()));
            prop_assert!((a - pm - dp).norm() < 1e-9 && (r - pm).norm() < 1e-9);
            let mult = m.multiplier().unwrap();
            let rebuilt = MoebiusMap::from_fixed_points(r, a, mult.q()).unwrap();
            prop_assert!(rebuilt.distance(&m) < 1e-9);
            prop_assert!((m.fixed_point_distance() - dp.norm()).abs() < 1e-12 * (1.0 + dp.norm()) * 1e3);
        }

        #[test]
        fn canonical_circles_pair_correctly(
            pm in arb_c(), dp in arb_c(), ell in 0.05..4.0f64, alpha in 0.0..core::f64::consts::TAU
        ) {
            prop_assume!(dp.norm() > 0.05);
            let m = MoebiusMap::from_fixed_points(pm, pm + dp, C64::from_polar(ell.exp(), alpha)).unwrap();
            let (cm, cp) = m.canonical_circles().unwrap();
            prop_assert!(cm.gap(&cp) > 0.0);
            for z in cm.sample(16, 0.3) {
                let w = m.apply(z);
                prop_assert!(((w - cp.center).norm() - cp.radius).abs() < 1e-8 * (1.0 + cp.radius));
            }
            // A point outside the C_- disk lands inside the C_+ disk.
            let far = cm.center + C64::new(cm.radius * 3.0 + 1.0, 0.0);
            prop_assert!(cp.contains(m.apply(far)));
        }
    }
}
