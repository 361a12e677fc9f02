// SPDX-License-Identifier: MIT OR Apache-2.0

//! Schwarzian derivatives.
//!
//! `S(f) = f‴/f′ - (3/2)(f″/f′)²`. Closed-form maps are differentiated
//! exactly with third-order jets; sampled maps use the Cauchy integral on a
//! small circle, which is spectrally accurate for holomorphic input.
//!
//! If `J` maps a domain into the upper half-plane and `J*g_{ℍ²} = e^φ|dz|²`,
//! then `∂²φ - ½(∂φ)² = S(J)`. [`sj_residual`] checks this with Wirtinger
//! differences of `φ`.

#[allow(unused_imports)]
use num_traits::Float;
use core::f64::consts::PI;
use core::ops::{Add, Div, Mul, Neg, Sub};

use crate::C64;

/// Value and first three complex derivatives of a holomorphic function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [C64; 4]);

impl Jet {
    /// The identity jet at `z`.
    pub fn var(z: C64) -> Self {
        Self([z, C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)])
    }

    /// A constant.
    pub fn constant(c: C64) -> Self {
        let z = C64::new(0.0, 0.0);
        Self([c, z, z, z])
    }

    /// Apply `g` with derivatives `(g, g′, g″, g‴)` at `self.0[0]`
    /// (Faa di Bruno to third order).
    pub fn compose(self, g: [C64; 4]) -> Self {
        let [_, f1, f2, f3] = self.0;
        Self([
            g[0],
            g[1] * f1,
            g[2] * f1 * f1 + g[1] * f2,
            g[3] * f1 * f1 * f1 + g[2] * f1 * f2 * 3.0 + g[1] * f3,
        ])
    }

    /// `exp`.
    pub fn exp(self) -> Self {
        let e = self.0[0].exp();
        self.compose([e; 4])
    }

    /// Principal `log`.
    pub fn ln(self) -> Self {
        let x = self.0[0];
        let r = x.inv();
        self.compose([x.ln(), r, -r * r, r * r * r * 2.0])
    }

    /// `sin`.
    pub fn sin(self) -> Self {
        let (s, c) = (self.0[0].sin(), self.0[0].cos());
        self.compose([s, c, -s, -c])
    }

    /// `cos`.
    pub fn cos(self) -> Self {
        let (s, c) = (self.0[0].sin(), self.0[0].cos());
        self.compose([c, -s, -c, s])
    }

    /// Integer power.
    pub fn powi(self, n: i32) -> Self {
        let x = self.0[0];
        let nf = n as f64;
        self.compose([
            x.powi(n),
            x.powi(n - 1) * nf,
            x.powi(n - 2) * (nf * (nf - 1.0)),
            x.powi(n - 3) * (nf * (nf - 1.0) * (nf - 2.0)),
        ])
    }

    /// `1/self`.
    pub fn recip(self) -> Self {
        self.powi(-1)
    }

    /// Schwarzian derivative at the base point.
    pub fn schwarzian(&self) -> C64 {
        schwarzian_from_derivatives(self.0[1], self.0[2], self.0[3])
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet(core::array::from_fn(|k| self.0[k] + o.0[k]))
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        Jet(core::array::from_fn(|k| self.0[k] - o.0[k]))
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        Jet(self.0.map(|c| -c))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self.0, o.0);
        Jet([
            a[0] * b[0],
            a[1] * b[0] + a[0] * b[1],
            a[2] * b[0] + a[1] * b[1] * 2.0 + a[0] * b[2],
            a[3] * b[0] + (a[2] * b[1] + a[1] * b[2]) * 3.0 + a[0] * b[3],
        ])
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Mul<C64> for Jet {
    type Output = Jet;
    fn mul(self, c: C64) -> Jet {
        Jet(self.0.map(|x| x * c))
    }
}

impl Add<C64> for Jet {
    type Output = Jet;
    fn add(self, c: C64) -> Jet {
        let mut out = self;
        out.0[0] += c;
        out
    }
}

/// `f‴/f′ - (3/2)(f″/f′)²`.
pub fn schwarzian_from_derivatives(f1: C64, f2: C64, f3: C64) -> C64 {
    let a = f2 / f1;
    f3 / f1 - a * a * 1.5
}

/// Schwarzian of a closed-form map written over jets.
pub fn schwarzian<F: Fn(Jet) -> Jet>(f: F, z: C64) -> C64 {
    f(Jet::var(z)).schwarzian()
}

/// `(f, f′, f″, f‴)` at `z` from `n` samples of `f` on the circle of
/// radius `r` around `z`. `f` must be holomorphic on a neighbourhood of
/// the closed disc.
pub fn cauchy_derivatives<F: Fn(C64) -> C64>(f: F, z: C64, r: f64, n: usize) -> [C64; 4] {
    let mut acc = [C64::new(0.0, 0.0); 4];
    for j in 0..n {
        let theta = 2.0 * PI * j as f64 / n as f64;
        let e = C64::from_polar(1.0, theta);
        let v = f(z + e * r);
        for (k, a) in acc.iter_mut().enumerate() {
            *a += v * e.powi(-(k as i32));
        }
    }
    let mut fact = 1.0;
    core::array::from_fn(|k| {
        if k > 0 {
            fact *= k as f64;
        }
        acc[k] * (fact / (n as f64 * r.powi(k as i32)))
    })
}

/// Schwarzian of a sampled holomorphic map (see [`cauchy_derivatives`]).
pub fn schwarzian_sampled<F: Fn(C64) -> C64>(f: F, z: C64, r: f64, n: usize) -> C64 {
    let d = cauchy_derivatives(f, z, r, n);
    schwarzian_from_derivatives(d[1], d[2], d[3])
}

/// `|S(f∘g) - (S(f)∘g) g′² - S(g)|` at `z`.
pub fn cocycle_residual<F: Fn(Jet) -> Jet, G: Fn(Jet) -> Jet>(f: F, g: G, z: C64) -> f64 {
    let gz = g(Jet::var(z));
    let lhs = f(gz).schwarzian();
    let rhs = schwarzian(&f, gz.0[0]) * gz.0[1] * gz.0[1] + gz.schwarzian();
    (lhs - rhs).norm()
}

/// `φ = log(|J′|²/(Im J)²)`, the log-density of `J*g_{ℍ²}`.
pub fn liouville_field<F: Fn(Jet) -> Jet>(j: &F, z: C64) -> f64 {
    let jet = j(Jet::var(z));
    2.0 * jet.0[1].norm().ln() - 2.0 * jet.0[0].im.ln()
}

/// Wirtinger derivatives `(∂φ, ∂²φ)` of a real function by 4th-order
/// central differences with step `h`.
pub fn wirtinger<F: Fn(f64, f64) -> f64>(phi: F, z: C64, h: f64) -> (C64, C64) {
    let (x, y) = (z.re, z.im);
    let dx = crate::numerics::diff::d1(|t| phi(t, y), x, h);
    let dy = crate::numerics::diff::d1(|t| phi(x, t), y, h);
    let dxx = crate::numerics::diff::d2(|t| phi(t, y), x, h);
    let dyy = crate::numerics::diff::d2(|t| phi(x, t), y, h);
    let dxy = crate::numerics::diff::d11(phi, x, y, h, h);
    (
        C64::new(0.5 * dx, -0.5 * dy),
        C64::new(0.25 * (dxx - dyy), -0.5 * dxy),
    )
}

/// `|∂²φ - ½(∂φ)² - S(J)|` at `z` for the Liouville field of `J`.
pub fn sj_residual<F: Fn(Jet) -> Jet>(j: F, z: C64, h: f64) -> f64 {
    let (d1, d2) = wirtinger(|x, y| liouville_field(&j, C64::new(x, y)), z, h);
    (d2 - d1 * d1 * 0.5 - schwarzian(&j, z)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn moebius(a: C64, b: C64, cc: C64, d: C64) -> impl Fn(Jet) -> Jet {
        move |z: Jet| (z * a + b) / (z * cc + Jet::constant(d))
    }

    #[test]
    fn examples() {
        // S(z²) = -3/(2z²), S(e^z) = -1/2, S(log z) = 1/(2z²).
        assert!((schwarzian(|z| z * z, c(1.0, 0.0)) - c(-1.5, 0.0)).norm() < 1e-14);
        let z = c(0.3, -0.7);
        assert!((schwarzian(Jet::exp, z) - c(-0.5, 0.0)).norm() < 1e-14);
        assert!((schwarzian(Jet::ln, z) - (z * z * 2.0).inv()).norm() < 1e-13);
        let tan = |w: Jet| w.sin() / w.cos();
        assert!((schwarzian(tan, z) - c(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn sampled_agrees_with_jets() {
        let f = |w: C64| (w * w + 1.0).ln() + w.exp();
        let fj = |w: Jet| (w * w + c(1.0, 0.0)).ln() + w.exp();
        let z = c(0.4, 0.2);
        let exact = fj(Jet::var(z)).0;
        let sampled = cauchy_derivatives(f, z, 0.2, 48);
        for k in 0..4 {
            assert!((exact[k] - sampled[k]).norm() < 1e-10 * (1.0 + exact[k].norm()));
        }
        assert!((schwarzian(fj, z) - schwarzian_sampled(f, z, 0.2, 48)).norm() < 1e-9);
    }

    #[test]
    fn liouville_identity_on_the_half_plane_and_the_strip() {
        let z = c(0.2, 1.1);
        assert!(sj_residual(|w| w, z, 1e-3) < 1e-7);
        assert!(sj_residual(Jet::exp, c(0.3, 0.9), 1e-3) < 1e-7);
        // The strip field is -2 log sin y.
        let phi = liouville_field(&Jet::exp, c(0.3, 0.9));
        assert!((phi + 2.0 * 0.9f64.sin().ln()).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn moebius_maps_have_zero_schwarzian(
            a in -2.0f64..2.0, b in -2.0f64..2.0, cc in -2.0f64..2.0, d in -2.0f64..2.0,
            x in -1.0f64..1.0, y in -1.0f64..1.0,
        ) {
            let (ca, cb, ccc, cd) = (c(a, 0.5), c(b, -0.3), c(cc, 0.2), c(d, 1.0));
            prop_assume!((ca * cd - cb * ccc).norm() > 0.1);
            let z = c(x, y);
            prop_assume!((z * ccc + cd).norm() > 0.2);
            let s = schwarzian(moebius(ca, cb, ccc, cd), z);
            prop_assert!(s.norm() < 1e-12 * (1.0 + (z * ccc + cd).norm().powi(-4)));
        }

        #[test]
        fn cocycle_holds(x in -1.0f64..1.0, y in -1.0f64..1.0, k in 0.5f64..2.0) {
            let z = c(x, y);
            let f = |w: Jet| w.exp() + w * w;
            let g = move |w: Jet| w.sin() * c(k, 0.0) + w * w * w;
            let r = cocycle_residual(f, g, z);
            let scale = 1.0 + schwarzian(g, z).norm();
            prop_assume!(g(Jet::var(z)).0[1].norm() > 0.1);
            prop_assert!(r < 1e-10 * scale, "r = {}", r);
        }
    }
}
