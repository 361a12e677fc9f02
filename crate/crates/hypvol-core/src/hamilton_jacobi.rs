// SPDX-License-Identifier: MIT OR Apache-2.0

//! Geodesic boundary defining functions by the method of characteristics.
//!
//! We look for `ρ = e^ω ρ₀` with `|dρ/ρ|_g = 1`, where `ρ₀` is the first
//! chart coordinate and `ω = φ` on `ρ₀ = 0`. Writing `p = dω` in chart
//! coordinates `(ρ₀, y₁, y₂)`, the equation becomes `H(x, p) = 0` for a
//! Hamiltonian that does not depend on `ω` itself, so the characteristic
//! system is
//!
//! ```text
//! ẋ = ∂_p H,   ṗ = -∂_x H,   ż = p · ∂_p H.
//! ```
//!
//! Because `∂H/∂p₀ = 2` on the boundary, the flow is transverse to it and we
//! use `ρ₀` itself as the integration variable. Values on a target grid are
//! obtained by steering each characteristic onto its node with Newton's
//! method on the foot point `(y₁, y₂)`.
//!
//! Two Hamiltonians are provided. [`CuspHamiltonian`] is the cusp-model
//! equation in blow-up coordinates `(U, v, w)`, `ρ₀ = U = u/R`, divided by `U`
//! so that it stays regular at the face. [`GenericHamiltonian`] works for any
//! compactified metric `ḡ = ρ₀² g` given as a [`MetricPatch`].

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::Matrix3;
use num_complex::Complex64 as C64;

use crate::cusp_model::{g_l_dual, CuspParams};
use crate::geometry::MetricPatch;
use crate::numerics::fit::{power_fit, LsqFit};
use crate::numerics::ode::{dopri5, OdeOptions};
use crate::Error;

/// Boundary data `φ(y₁, y₂)` with its gradient.
pub trait BoundaryData {
    /// `(φ, ∂₁φ, ∂₂φ)` at `(y₁, y₂)`.
    fn eval(&self, y1: f64, y2: f64) -> (f64, f64, f64);
}

/// Constant boundary data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl BoundaryData for Constant {
    fn eval(&self, _: f64, _: f64) -> (f64, f64, f64) {
        (self.0, 0.0, 0.0)
    }
}

/// Boundary data from a closure returning `(φ, ∂₁φ, ∂₂φ)`.
#[derive(Clone, Copy)]
pub struct FnData<F>(pub F);

impl<F> core::fmt::Debug for FnData<F> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str("FnData(..)")
    }
}

impl<F: Fn(f64, f64) -> (f64, f64, f64)> BoundaryData for FnData<F> {
    fn eval(&self, y1: f64, y2: f64) -> (f64, f64, f64) {
        (self.0)(y1, y2)
    }
}

/// Cusp-compliant collar data
/// `φ = c₀ + c₁v + c₂v² + b v² e^{-s/v²} cos(4πw + θ)`.
///
/// The `w`-dependence is flat to infinite order at `v = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompliantData {
    /// Constant term.
    pub c0: f64,
    /// Linear term.
    pub c1: f64,
    /// Quadratic term.
    pub c2: f64,
    /// Amplitude of the `w` mode.
    pub b: f64,
    /// Flatness scale `s > 0`.
    pub s: f64,
    /// Phase of the `w` mode.
    pub theta: f64,
}

impl BoundaryData for CompliantData {
    fn eval(&self, v: f64, w: f64) -> (f64, f64, f64) {
        let (g, dg) = if v == 0.0 {
            (0.0, 0.0)
        } else {
            let e = (-self.s / (v * v)).exp();
            (v * v * e, e * (2.0 * v + 2.0 * self.s / v))
        };
        let (sn, cs) = (4.0 * PI * w + self.theta).sin_cos();
        (
            self.c0 + self.c1 * v + self.c2 * v * v + self.b * g * cs,
            self.c1 + 2.0 * self.c2 * v + self.b * dg * cs,
            -4.0 * PI * self.b * g * sn,
        )
    }
}

/// A Hamiltonian `H(x, p)` for `ω`, with `x₀ = ρ₀` the boundary defining
/// coordinate.
pub trait Hamiltonian {
    /// `H(x, p)`.
    fn value(&self, x: &[f64; 3], p: &[f64; 3]) -> Result<f64, &'static str>;
    /// `(∂_x H, ∂_p H)`.
    fn gradients(&self, x: &[f64; 3], p: &[f64; 3]) -> Result<([f64; 3], [f64; 3]), &'static str>;
    /// `p₀` on the boundary making `H = 0` for the given tangential momenta.
    fn initial_normal_momentum(&self, y: [f64; 2], pt: [f64; 2]) -> Result<f64, &'static str>;
    /// `|dρ/ρ|²_g - 1` for `ρ = e^ω ρ₀` with `dω = p`, evaluated without
    /// going through [`Hamiltonian::value`].
    fn eikonal_residual(&self, x: &[f64; 3], p: &[f64; 3]) -> f64;
}

/// The cusp-model Hamiltonian in `(U, v, w)`.
///
/// With `η = ((1-U²)p_U, R p_v - V - U V p_U, R p_w)` and `A = M/R⁴` the
/// rescaled dual metric,
///
/// ```text
/// F̃ = -2U + U³ + 4ν²UV²(1-U²)² + 2(1-U²)(Aη)₁ + U ηᵀAη,
/// ```
///
/// and `U F̃ = |dρ/ρ|²_g - 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuspHamiltonian {
    /// `ℓ`.
    pub ell: f64,
    /// `ν`.
    pub nu: f64,
}

/// Complex-step increment.
const CSTEP: f64 = 1e-30;

impl CuspHamiltonian {
    /// From model parameters.
    pub fn new(p: &CuspParams) -> Self {
        Self { ell: p.ell, nu: p.nu }
    }

    /// `F̃` over complex arguments.
    pub fn f_tilde(&self, x: &[C64; 3], p: &[C64; 3]) -> C64 {
        let nu = self.nu;
        let nu2 = nu * nu;
        let (uu, v) = (x[0], x[1]);
        let u2 = uu * uu;
        let om = -u2 + 1.0;
        let r2 = (v * v + self.ell * self.ell) / om;
        let r = r2.sqrt();
        let vv = v / r;
        let s = -u2 * 2.0 + 1.0;
        let a11 = uu * uu * vv * vv * (4.0 * nu2) + 1.0;
        let a12 = uu * vv * s * (2.0 * nu2);
        let a13 = -uu * vv * (2.0 * nu) / r2;
        let a22 = s * s * nu2 + 1.0;
        let a23 = -s * nu / r2;
        let a33 = (r2 * r2).inv();
        let e1 = om * p[0];
        let e2 = r * p[1] - vv - uu * vv * p[0];
        let e3 = r * p[2];
        let ae1 = a11 * e1 + a12 * e2 + a13 * e3;
        let ae2 = a12 * e1 + a22 * e2 + a23 * e3;
        let ae3 = a13 * e1 + a23 * e2 + a33 * e3;
        let quad = e1 * ae1 + e2 * ae2 + e3 * ae3;
        -uu * 2.0 + uu * u2 + uu * vv * vv * om * om * (4.0 * nu2) + om * ae1 * 2.0 + uu * quad
    }

    fn real_args(x: &[f64; 3], p: &[f64; 3]) -> ([C64; 3], [C64; 3]) {
        (x.map(|t| C64::new(t, 0.0)), p.map(|t| C64::new(t, 0.0)))
    }

    fn guard(&self, x: &[f64; 3]) -> Result<(), &'static str> {
        if !(x[0].abs() < 1.0) {
            return Err("U outside (-1, 1)");
        }
        if x[1] * x[1] + self.ell * self.ell == 0.0 {
            return Err("R = 0: singular cusp point");
        }
        Ok(())
    }
}

impl Hamiltonian for CuspHamiltonian {
    fn value(&self, x: &[f64; 3], p: &[f64; 3]) -> Result<f64, &'static str> {
        self.guard(x)?;
        let (xc, pc) = Self::real_args(x, p);
        Ok(self.f_tilde(&xc, &pc).re)
    }

    fn gradients(&self, x: &[f64; 3], p: &[f64; 3]) -> Result<([f64; 3], [f64; 3]), &'static str> {
        self.guard(x)?;
        let (xc, pc) = Self::real_args(x, p);
        let mut hx = [0.0; 3];
        let mut hp = [0.0; 3];
        for k in 0..3 {
            let mut xk = xc;
            xk[k].im = CSTEP;
            hx[k] = self.f_tilde(&xk, &pc).im / CSTEP;
            let mut pk = pc;
            pk[k].im = CSTEP;
            hp[k] = self.f_tilde(&xc, &pk).im / CSTEP;
        }
        Ok((hx, hp))
    }

    fn initial_normal_momentum(&self, _: [f64; 2], _: [f64; 2]) -> Result<f64, &'static str> {
        Ok(0.0)
    }

    fn eikonal_residual(&self, x: &[f64; 3], p: &[f64; 3]) -> f64 {
        let [big_u, v, w] = *x;
        let r = ((v * v + self.ell * self.ell) / (1.0 - big_u * big_u)).sqrt();
        let (u, vv) = (big_u * r, v / r);
        let xi = nalgebra::Vector3::new(
            (1.0 - big_u * big_u) / u * (1.0 + big_u * p[0]),
            p[1] - vv / r - big_u * vv * p[0] / r,
            p[2],
        );
        let params = CuspParams {
            ell: self.ell,
            nu: self.nu,
            lambda: 1.0,
        };
        let d = g_l_dual(&params, &[u, v, w]);
        xi.dot(&(d * xi)) - 1.0
    }
}

/// `H = 2⟨dω, dρ₀⟩_ḡ + ρ₀|dω|²_ḡ - (1 - |dρ₀|²_ḡ)/ρ₀` for a compactified
/// metric `ḡ` in coordinates `(ρ₀, y₁, y₂)`.
///
/// `x`-derivatives are taken by 4th-order differences, so `ḡ` must be
/// smooth on a neighbourhood of the closed chart, including slightly
/// negative `ρ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenericHamiltonian<M> {
    /// The compactified metric `ḡ`.
    pub metric: M,
    /// Difference step in `x`.
    pub step: f64,
}

/// Below this `ρ₀` the quotient `(1 - ḡ^{00})/ρ₀` is replaced by `-∂₀ḡ^{00}`.
const QUOTIENT_CUT: f64 = 1e-6;

impl<M: MetricPatch<3>> GenericHamiltonian<M> {
    /// With the default difference step `1e-4`.
    pub fn new(metric: M) -> Self {
        Self { metric, step: 1e-4 }
    }

    fn quotient(&self, x: &[f64; 3], d: &Matrix3<f64>) -> f64 {
        if x[0].abs() >= QUOTIENT_CUT {
            return (1.0 - d[(0, 0)]) / x[0];
        }
        let h = self.step;
        let at = |t: f64| self.metric.dual(&[x[0] + t, x[1], x[2]])[(0, 0)];
        -(at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
    }

    fn h_at(&self, x: &[f64; 3], p: &[f64; 3]) -> f64 {
        let d = self.metric.dual(x);
        let pv = nalgebra::Vector3::from(*p);
        let dp = d * pv;
        2.0 * dp[0] + x[0] * pv.dot(&dp) - self.quotient(x, &d)
    }
}

impl<M: MetricPatch<3>> Hamiltonian for GenericHamiltonian<M> {
    fn value(&self, x: &[f64; 3], p: &[f64; 3]) -> Result<f64, &'static str> {
        Ok(self.h_at(x, p))
    }

    fn gradients(&self, x: &[f64; 3], p: &[f64; 3]) -> Result<([f64; 3], [f64; 3]), &'static str> {
        let d = self.metric.dual(x);
        let dp = d * nalgebra::Vector3::from(*p);
        let hp = [
            2.0 * d[(0, 0)] + 2.0 * x[0] * dp[0],
            2.0 * d[(0, 1)] + 2.0 * x[0] * dp[1],
            2.0 * d[(0, 2)] + 2.0 * x[0] * dp[2],
        ];
        let h = self.step;
        let mut hx = [0.0; 3];
        for (k, out) in hx.iter_mut().enumerate() {
            let at = |t: f64| {
                let mut y = *x;
                y[k] += t;
                self.h_at(&y, p)
            };
            *out = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
        }
        Ok((hx, hp))
    }

    fn initial_normal_momentum(&self, y: [f64; 2], pt: [f64; 2]) -> Result<f64, &'static str> {
        let x = [0.0, y[0], y[1]];
        let d = self.metric.dual(&x);
        if (d[(0, 0)] - 1.0).abs() > 1e-8 {
            return Err("boundary is characteristic: |d rho0| != 1");
        }
        let q = self.quotient(&x, &d);
        Ok((0.5 * q - d[(0, 1)] * pt[0] - d[(0, 2)] * pt[1]) / d[(0, 0)])
    }

    fn eikonal_residual(&self, x: &[f64; 3], p: &[f64; 3]) -> f64 {
        let d = self.metric.dual(x);
        let xi = nalgebra::Vector3::new(1.0 + x[0] * p[0], x[0] * p[1], x[0] * p[2]);
        xi.dot(&(d * xi)) - 1.0
    }
}

/// The compactified cusp metric `ḡ = U² g_L` in `(U, v, w)`.
///
/// Its dual is `R² J A Jᵀ` with `A = M/R⁴` and `J = ∂(U, v, w)/∂(u, v, w)`,
/// which stays regular at `U = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompactifiedModel(pub CuspParams);

impl MetricPatch<3> for CompactifiedModel {
    fn metric(&self, x: &[f64; 3]) -> Matrix3<f64> {
        self.dual(x).try_inverse().unwrap_or_else(|| Matrix3::from_element(f64::NAN))
    }

    fn dual(&self, x: &[f64; 3]) -> Matrix3<f64> {
        let (bu, v) = (x[0], x[1]);
        let nu = self.0.nu;
        let r2 = (v * v + self.0.ell * self.0.ell) / (1.0 - bu * bu);
        let r = r2.sqrt();
        let vv = v / r;
        let s = 1.0 - 2.0 * bu * bu;
        let a = Matrix3::new(
            1.0 + 4.0 * nu * nu * bu * bu * vv * vv,
            2.0 * nu * nu * bu * vv * s,
            -2.0 * nu * bu * vv / r2,
            2.0 * nu * nu * bu * vv * s,
            1.0 + nu * nu * s * s,
            -nu * s / r2,
            -2.0 * nu * bu * vv / r2,
            -nu * s / r2,
            1.0 / (r2 * r2),
        );
        let j = Matrix3::new((1.0 - bu * bu) / r, -bu * vv / r, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        j * a * j.transpose() * r2
    }

    fn contains(&self, x: &[f64; 3]) -> bool {
        x[0].abs() < 1.0 && x[1] * x[1] + self.0.ell * self.0.ell > 0.0
    }
}

/// One point of a characteristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharacteristicState {
    /// Position `(ρ₀, y₁, y₂)`.
    pub x: [f64; 3],
    /// Momentum `p = dω`.
    pub p: [f64; 3],
    /// `ω` along the curve.
    pub z: f64,
    /// Hamiltonian flow parameter.
    pub s: f64,
}

/// Integrator settings used by the solvers.
pub fn default_ode_options() -> OdeOptions {
    OdeOptions {
        rtol: 1e-12,
        atol: 1e-12,
        h0: 1e-3,
        h_max: 0.02,
        max_steps: 20_000,
    }
}

/// Integrate the characteristic starting at `(0, y₀)` and report it at each
/// requested `ρ₀` level (increasing, non-negative).
pub fn characteristic<H: Hamiltonian + ?Sized, D: BoundaryData + ?Sized>(
    ham: &H,
    data: &D,
    y0: [f64; 2],
    levels: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<CharacteristicState>, Error> {
    let (phi, p1, p2) = data.eval(y0[0], y0[1]);
    let p0 = ham
        .initial_normal_momentum(y0, [p1, p2])
        .map_err(|reason| Error::Ode(crate::numerics::ode::OdeError::Rhs { t: 0.0, reason }))?;
    let start = [y0[0], y0[1], p0, p1, p2, phi, 0.0];
    let rhs = |t: f64, y: &[f64], dy: &mut [f64]| -> Result<(), &'static str> {
        let x = [t, y[0], y[1]];
        let p = [y[2], y[3], y[4]];
        let (hx, hp) = ham.gradients(&x, &p)?;
        if !(hp[0] > 1e-8) {
            return Err("characteristic turned back towards the boundary");
        }
        let inv = 1.0 / hp[0];
        dy[0] = hp[1] * inv;
        dy[1] = hp[2] * inv;
        dy[2] = -hx[0] * inv;
        dy[3] = -hx[1] * inv;
        dy[4] = -hx[2] * inv;
        dy[5] = (p[0] * hp[0] + p[1] * hp[1] + p[2] * hp[2]) * inv;
        dy[6] = inv;
        Ok(())
    };
    let positive: Vec<f64> = levels.iter().copied().filter(|t| *t > 0.0).collect();
    let (ys, _) = if positive.is_empty() {
        (Vec::new(), Default::default())
    } else {
        dopri5(rhs, 0.0, &start, &positive, opts)?
    };
    let mut it = ys.into_iter();
    let mut out = Vec::with_capacity(levels.len());
    for &t in levels {
        let y = if t > 0.0 { it.next().ok_or(Error::InvalidInput("levels must be increasing"))? } else { start.to_vec() };
        out.push(CharacteristicState {
            x: [t, y[0], y[1]],
            p: [y[2], y[3], y[4]],
            z: y[5],
            s: y[6],
        });
    }
    Ok(out)
}

/// Solution value at one grid node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaNode {
    /// Position `(ρ₀, y₁, y₂)`.
    pub x: [f64; 3],
    /// `ω`.
    pub omega: f64,
    /// `dω`.
    pub p: [f64; 3],
    /// `|dρ/ρ|²_g - 1` from the direct metric evaluation.
    pub residual: f64,
    /// `H` along the characteristic at this node.
    pub hamiltonian: f64,
    /// Foot point of the characteristic through the node.
    pub foot: [f64; 2],
    /// Flow parameter at the node.
    pub s: f64,
    /// `false` if the node could not be reached.
    pub valid: bool,
}

impl OmegaNode {
    fn invalid(x: [f64; 3]) -> Self {
        Self {
            x,
            omega: f64::NAN,
            p: [f64::NAN; 3],
            residual: f64::NAN,
            hamiltonian: f64::NAN,
            foot: [f64::NAN; 2],
            s: f64::NAN,
            valid: false,
        }
    }
}

/// Settings for flow-map inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    /// Integrator settings.
    pub ode: OdeOptions,
    /// Newton tolerance on the landing point.
    pub tol: f64,
    /// Newton iteration cap per node.
    pub max_iter: usize,
    /// Difference steps in `y₁` and `y₂` for the flow-map Jacobian.
    pub fd_step: [f64; 2],
    /// Smallest admissible `|det|` of the flow-map Jacobian.
    pub min_det: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            ode: default_ode_options(),
            tol: 1e-12,
            max_iter: 20,
            fd_step: [1e-6; 2],
            min_det: 1e-8,
        }
    }
}

/// `ω` along the fixed target `(y₁, y₂)` at each level (increasing, the
/// first may be 0). Each level is reached by Newton on the foot point,
/// warm-started from the previous level.
pub fn solve_column<H: Hamiltonian + ?Sized, D: BoundaryData + ?Sized>(
    ham: &H,
    data: &D,
    target: [f64; 2],
    levels: &[f64],
    opts: &InversionOptions,
) -> Result<Vec<OmegaNode>, Error> {
    let mut foot = target;
    let mut out = Vec::with_capacity(levels.len());
    for &level in levels {
        let x = [level, target[0], target[1]];
        if level == 0.0 {
            let (phi, p1, p2) = data.eval(target[0], target[1]);
            let p0 = ham.initial_normal_momentum(target, [p1, p2]).unwrap_or(f64::NAN);
            let p = [p0, p1, p2];
            out.push(OmegaNode {
                x,
                omega: phi,
                p,
                residual: 0.0,
                hamiltonian: ham.value(&x, &p).unwrap_or(f64::NAN),
                foot: target,
                s: 0.0,
                valid: true,
            });
            continue;
        }
        match steer(ham, data, target, level, foot, opts) {
            Ok((st, f)) => {
                foot = f;
                out.push(OmegaNode {
                    x,
                    omega: st.z,
                    p: st.p,
                    residual: ham.eikonal_residual(&x, &st.p),
                    hamiltonian: ham.value(&st.x, &st.p).unwrap_or(f64::NAN),
                    foot: f,
                    s: st.s,
                    valid: true,
                });
            }
            Err(_) => out.push(OmegaNode::invalid(x)),
        }
    }
    Ok(out)
}

fn land<H: Hamiltonian + ?Sized, D: BoundaryData + ?Sized>(
    ham: &H,
    data: &D,
    foot: [f64; 2],
    level: f64,
    opts: &InversionOptions,
) -> Result<CharacteristicState, Error> {
    Ok(characteristic(ham, data, foot, &[level], &opts.ode)?[0])
}

/// Newton stops at the integrator noise floor; the best iterate is kept if
/// it lies within this multiple of the tolerance.
const STAGNATION: f64 = 1e3;

fn steer<H: Hamiltonian + ?Sized, D: BoundaryData + ?Sized>(
    ham: &H,
    data: &D,
    target: [f64; 2],
    level: f64,
    mut foot: [f64; 2],
    opts: &InversionOptions,
) -> Result<(CharacteristicState, [f64; 2]), Error> {
    let fail = Error::FlowInversion {
        v: target[0],
        w: target[1],
        level,
    };
    let mut best: Option<(f64, CharacteristicState, [f64; 2])> = None;
    for _ in 0..opts.max_iter {
        let st = land(ham, data, foot, level, opts)?;
        let g = [st.x[1] - target[0], st.x[2] - target[1]];
        let err = g[0].abs().max(g[1].abs());
        // Long drifts in `y` lift the integrator noise floor, so the
        // tolerance is relative to the foot point as well as the target.
        let scale = 1.0 + target[0].abs().max(target[1].abs()).max(foot[0].abs()).max(foot[1].abs());
        if err <= opts.tol * scale {
            return Ok((st, foot));
        }
        if best.as_ref().is_none_or(|b| err / scale < b.0) {
            best = Some((err / scale, st, foot));
        }
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let h = opts.fd_step[k];
            let mut a = foot;
            let mut b = foot;
            a[k] += h;
            b[k] -= h;
            let sa = land(ham, data, a, level, opts)?;
            let sb = land(ham, data, b, level, opts)?;
            jac[0][k] = (sa.x[1] - sb.x[1]) / (2.0 * h);
            jac[1][k] = (sa.x[2] - sb.x[2]) / (2.0 * h);
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det.abs() > opts.min_det) {
            return Err(fail);
        }
        foot[0] -= (jac[1][1] * g[0] - jac[0][1] * g[1]) / det;
        foot[1] -= (-jac[1][0] * g[0] + jac[0][0] * g[1]) / det;
    }
    match best {
        Some((err, st, f)) if err <= STAGNATION * opts.tol => Ok((st, f)),
        _ => Err(fail),
    }
}

/// Values of `ω` on a tensor grid `levels × y₁-nodes × y₂-nodes`.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaField {
    /// `ρ₀` levels, increasing.
    pub levels: Vec<f64>,
    /// `y₁` nodes.
    pub y1: Vec<f64>,
    /// `y₂` nodes.
    pub y2: Vec<f64>,
    /// Nodes ordered by `(y₁, y₂, level)` with the level fastest.
    pub nodes: Vec<OmegaNode>,
}

impl OmegaField {
    /// Nodes over the levels at `(y1[i], y2[j])`.
    pub fn column(&self, i: usize, j: usize) -> &[OmegaNode] {
        let n = self.levels.len();
        let start = (i * self.y2.len() + j) * n;
        &self.nodes[start..start + n]
    }

    /// Largest `|residual|` over valid nodes.
    pub fn max_residual(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.valid)
            .map(|n| n.residual.abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|H|` over valid nodes.
    pub fn max_hamiltonian(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| n.valid)
            .map(|n| n.hamiltonian.abs())
            .fold(0.0, f64::max)
    }

    /// Number of flagged nodes.
    pub fn invalid_count(&self) -> usize {
        self.nodes.iter().filter(|n| !n.valid).count()
    }
}

/// Solve on a tensor grid.
pub fn solve_grid<H: Hamiltonian + ?Sized, D: BoundaryData + ?Sized>(
    ham: &H,
    data: &D,
    y1: &[f64],
    y2: &[f64],
    levels: &[f64],
    opts: &InversionOptions,
) -> Result<OmegaField, Error> {
    if levels.windows(2).any(|w| w[1] <= w[0]) || levels.first().is_some_and(|l| *l < 0.0) {
        return Err(Error::InvalidInput("levels must be non-negative and increasing"));
    }
    let mut nodes = Vec::with_capacity(y1.len() * y2.len() * levels.len());
    for &a in y1 {
        for &b in y2 {
            nodes.extend(solve_column(ham, data, [a, b], levels, opts)?);
        }
    }
    Ok(OmegaField {
        levels: levels.to_vec(),
        y1: y1.to_vec(),
        y2: y2.to_vec(),
        nodes,
    })
}

/// Cusp-model solve in `(U, v, w)`.
///
/// At `ℓ = 0` the grid must avoid `v = 0`, where `R` vanishes; there the
/// equation is integrated on each side separately.
pub fn hj_cusp_solve<D: BoundaryData + ?Sized>(
    params: &CuspParams,
    data: &D,
    v_nodes: &[f64],
    w_nodes: &[f64],
    levels: &[f64],
    opts: &InversionOptions,
) -> Result<OmegaField, Error> {
    if params.ell == 0.0 && v_nodes.contains(&0.0) {
        return Err(Error::OutOfDomain("v = 0 is the cusp itself when ell = 0"));
    }
    solve_grid(&CuspHamiltonian::new(params), data, v_nodes, w_nodes, levels, opts)
}

/// Generic solve for `ḡ` in coordinates `(ρ₀, y₁, y₂)`.
pub fn hj_generic<M: MetricPatch<3>, D: BoundaryData + ?Sized>(
    metric: M,
    data: &D,
    y1: &[f64],
    y2: &[f64],
    levels: &[f64],
    opts: &InversionOptions,
) -> Result<OmegaField, Error> {
    let ham = GenericHamiltonian::new(metric);
    let d = ham.metric.dual(&[0.0, y1.first().copied().unwrap_or(0.0), y2.first().copied().unwrap_or(0.0)]);
    if (d[(0, 0)] - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidInput("boundary is characteristic: |d rho0| != 1"));
    }
    solve_grid(&ham, data, y1, y2, levels, opts)
}

/// Default upper level for expansion fits. The coefficients of `ω` in `U`
/// grow like `|v|^{-k}` near the cusp, so the window is kept small.
pub const DEFAULT_FIT_TOP: f64 = 0.04;

/// Chebyshev-Lobatto levels on `[0, top]`, starting at 0.
pub fn chebyshev_levels(top: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 0.5 * top * (1.0 - (PI * k as f64 / (n - 1) as f64).cos()))
        .collect()
}

/// Fitted coefficients of `ω = a₀ + a₁ρ₀ + a₂ρ₀² + ...` on one column.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoeffs {
    /// `y₁` of the column.
    pub y1: f64,
    /// `y₂` of the column.
    pub y2: f64,
    /// `a₀`.
    pub a0: f64,
    /// `a₁`.
    pub a1: f64,
    /// `a₂`.
    pub a2: f64,
    /// Full fit.
    pub fit: LsqFit,
}

/// Polynomial fit in `ρ₀` of the given degree on every column of `field`.
pub fn expansion_coeffs(field: &OmegaField, degree: usize) -> Result<Vec<ExpansionCoeffs>, Error> {
    if degree < 2 {
        return Err(Error::InvalidInput("degree must be at least 2"));
    }
    let mut out = Vec::new();
    for i in 0..field.y1.len() {
        for j in 0..field.y2.len() {
            let col: Vec<&OmegaNode> = field.column(i, j).iter().filter(|n| n.valid).collect();
            if col.len() < (degree + 1).max(4) {
                return Err(Error::InvalidInput("not enough resolved levels for the expansion fit"));
            }
            let xs: Vec<f64> = col.iter().map(|n| n.x[0]).collect();
            let ys: Vec<f64> = col.iter().map(|n| n.omega).collect();
            let exps: Vec<i32> = (0..=degree as i32).collect();
            let fit = power_fit(&xs, &ys, &exps)?;
            out.push(ExpansionCoeffs {
                y1: field.y1[i],
                y2: field.y2[j],
                a0: fit.coeffs[0],
                a1: fit.coeffs[1],
                a2: fit.coeffs[2],
                fit,
            });
        }
    }
    Ok(out)
}

/// `|dφ|²_{h_ℓ}` from `(φ_v, φ_w)`.
pub fn grad_norm_h_ell(ell: f64, nu: f64, v: f64, phi_v: f64, phi_w: f64) -> f64 {
    let s = v * v + ell * ell;
    (1.0 + nu * nu) * s * phi_v * phi_v - 2.0 * nu * phi_v * phi_w + phi_w * phi_w / s
}

/// Closed-form `a₂` of the cusp-model expansion:
///
/// ```text
/// a₂ = -¼ ( |dφ|²_{h_ℓ} + (1+ν²)(1 - ℓ²/(v²+ℓ²)) - 2
///           + 2(ν²-1) v ∂_vφ - 2ν v (v²+ℓ²)⁻¹ ∂_wφ ).
/// ```
pub fn a2_closed_form(ell: f64, nu: f64, v: f64, phi_v: f64, phi_w: f64) -> f64 {
    let s = v * v + ell * ell;
    -0.25
        * (grad_norm_h_ell(ell, nu, v, phi_v, phi_w) + (1.0 + nu * nu) * (1.0 - ell * ell / s) - 2.0
            + 2.0 * (nu * nu - 1.0) * v * phi_v
            - 2.0 * nu * v / s * phi_w)
}

/// `ω` for `ℓ = 0, ν = 0, φ = 0`: `log(2/(1 + sqrt(1 - U²)))`.
pub fn omega_flat_cusp(big_u: f64) -> f64 {
    (2.0 / (1.0 + (1.0 - big_u * big_u).sqrt())).ln()
}

/// `ω(ρ₀)` on one column as a polynomial interpolant through
/// Chebyshev-Lobatto levels.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaProfile {
    top: f64,
    values: Vec<f64>,
    weights: Vec<f64>,
    nodes: Vec<f64>,
}

impl OmegaProfile {
    /// Solve one column on `n` Chebyshev-Lobatto levels of `[0, top]`.
    pub fn solve<H: Hamiltonian + ?Sized, D: BoundaryData + ?Sized>(
        ham: &H,
        data: &D,
        target: [f64; 2],
        top: f64,
        n: usize,
        opts: &InversionOptions,
    ) -> Result<Self, Error> {
        if n < 3 || !(top > 0.0) {
            return Err(Error::InvalidInput("profile needs n >= 3 and top > 0"));
        }
        let levels = chebyshev_levels(top, n);
        let col = solve_column(ham, data, target, &levels, opts)?;
        if let Some(bad) = col.iter().find(|c| !c.valid) {
            return Err(Error::FlowInversion {
                v: target[0],
                w: target[1],
                level: bad.x[0],
            });
        }
        Ok(Self::from_values(top, col.iter().map(|c| c.omega).collect()))
    }

    /// From values at the Chebyshev-Lobatto levels of `[0, top]`.
    pub fn from_values(top: f64, values: Vec<f64>) -> Self {
        let n = values.len();
        let nodes = chebyshev_levels(top, n);
        let weights = (0..n)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                if k == 0 || k == n - 1 {
                    0.5 * sign
                } else {
                    sign
                }
            })
            .collect();
        Self {
            top,
            values,
            weights,
            nodes,
        }
    }

    /// Upper end of the interpolation interval.
    pub fn top(&self) -> f64 {
        self.top
    }

    /// Interpolated `ω(t)`.
    pub fn eval(&self, t: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for ((x, w), f) in self.nodes.iter().zip(&self.weights).zip(&self.values) {
            let d = t - x;
            if d == 0.0 {
                return *f;
            }
            let c = w / d;
            num += c * f;
            den += c;
        }
        num / den
    }

    /// Derivative by a 4th-order difference of the interpolant.
    pub fn derivative(&self, t: f64) -> f64 {
        let h = 1e-4 * self.top;
        (self.eval(t - 2.0 * h) - 8.0 * self.eval(t - h) + 8.0 * self.eval(t + h) - self.eval(t + 2.0 * h))
            / (12.0 * h)
    }

    /// Solve `t e^{ω(t)} = eps` for `t` in `(0, top]` by Newton.
    pub fn level_of(&self, eps: f64) -> Result<f64, Error> {
        let mut t = eps * (-self.eval(0.0)).exp();
        for it in 0..60 {
            let g = t * self.eval(t).exp() - eps;
            let dg = self.eval(t).exp() * (1.0 + t * self.derivative(t));
            let step = g / dg;
            t -= step;
            if !(t > 0.0 && t <= self.top) {
                return Err(Error::NewtonDiverged { iterations: it, residual: g.abs() });
            }
            if step.abs() <= 1e-15 * t {
                return Ok(t);
            }
        }
        Err(Error::NewtonDiverged { iterations: 60, residual: f64::NAN })
    }
}

/// Largest `|p_w(s) - p_w(0)|` along a characteristic.
pub fn p_w_drift(states: &[CharacteristicState]) -> f64 {
    let p0 = states.first().map_or(0.0, |s| s.p[2]);
    states.iter().map(|s| (s.p[2] - p0).abs()).fold(0.0, f64::max)
}

/// Fitted contraction rate `C` with `|v(s)| >= |v₀| e^{-Cs}` along a
/// characteristic, i.e. `max_s -log(|v(s)|/|v₀|)/s`.
pub fn contraction_rate(states: &[CharacteristicState]) -> f64 {
    let v0 = states.first().map_or(0.0, |s| s.x[1]).abs();
    states
        .iter()
        .filter(|s| s.s > 0.0)
        .map(|s| -(s.x[1].abs() / v0).ln() / s.s)
        .fold(f64::NEG_INFINITY, f64::max)
}
