// SPDX-License-Identifier: MIT OR Apache-2.0

//! The ε-sweep towards the cusped limit on the cyclic model.
//!
//! A [`CyclicFamily`] prescribes `ℓ(ε)`, `ν(ε)` and the boundary values of
//! the conformal factor at `v = ±v_max`. At every `ε` the collar is
//! uniformized ([`crate::uniformize`]), and the geodesic defining function
//! `ρ = U e^{ω}` comes from the Hamilton-Jacobi solver with data
//! `a₀ = φ + ½ log(1+ν²)` relative to `h_ℓ`.
//!
//! Two cutoffs split the chart: `χ = η(u/δ)η(|v|/δ)` around the pinching
//! point and the outer window `Ξ = η(u/2δ)η(|v|/2δ)`, which equals 1 on the
//! support of `χ`. With `θ = 1 - χ` (zero on the δ-box, one outside the
//! 2δ-box) the far weight is `Ξθ = Ξ - χ`.
//!
//! Finite parts are computed in two independent ways.
//!
//! * Direct: the volume of `{ρ ≥ ε}` is split at a fixed level `U_c`.
//!   Above it the bulk is integrated in `(u, v)`; below it every
//!   quadrature column contributes `A(U_c) - A(U*(ε))`, with `U*(ε)` read
//!   off an HJ profile, and the ε-dependence is fitted.
//! * Regions (near piece only): the chart is cut into
//!   `R₁ = {ℓ ≤ u ≤ D, |v| ≤ u}`, `R₂ = {u ≤ ℓ, |v| ≤ ℓ}` and
//!   `R₃ = {ℓ ≤ |v| ≤ D, u ≤ |v|}` with `D = 2δ`. `R₁` has finite volume.
//!   On `R₂` and `R₃` the finite part splits into a Hadamard part
//!   (`A₁`, `I₁`), a residue carrying `a₀ + a₂` (`A₂`, `I₂`) and a residue
//!   from the change of defining function `U ↦ ũ` or `û` (`A₃`, `I₃`).
//!   Here `a₂` is the closed-form coefficient of the HJ expansion.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::cusp_model::{CuspParams, W_PERIOD};
use crate::hamilton_jacobi::{a2_closed_form, BoundaryData, CuspHamiltonian, InversionOptions, OmegaProfile};
use crate::numerics::quad::{merge_breaks, GaussLegendre};
use crate::numerics::{geometric_sequence, pairwise_sum};
use crate::renvol::finite_part::{finite_part_fit_with, layer_antiderivative, FinitePartResult};
use crate::schottky::Profile;
use crate::uniformize::{solve_cusp_limit, solve_neck, CollarSettings, ConformalFactor, CuspLimit};
use crate::Error;

/// Smooth step: 1 on `t ≤ 1`, 0 on `t ≥ 2`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 1.0 {
        return 1.0;
    }
    if t >= 2.0 {
        return 0.0;
    }
    let a = (-1.0 / (2.0 - t)).exp();
    let b = (-1.0 / (t - 1.0)).exp();
    a / (a + b)
}

/// A cutoff `χ(u, v)` on the model chart, independent of `w`.
pub trait Cutoff {
    /// `χ(u, v)`.
    fn value(&self, u: f64, v: f64) -> f64;
    /// `[χ, ∂_uχ, ½∂²_uχ]` at `u = 0`.
    fn u_taylor(&self, v: f64) -> [f64; 3];
    /// `χ(u, v) = χ(0, v)` for `u ≤ flat_below()`.
    fn flat_below(&self) -> f64;
    /// Support inside `[0, reach) × (-reach, reach)`.
    fn reach(&self) -> f64;
    /// Values of `u` and `|v|` where `χ` changes regime.
    fn kinks(&self) -> Vec<f64>;
}

/// `η(u/δ) η(|v|/δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxCutoff {
    /// Inner half-width `δ`.
    pub delta: f64,
}

impl Cutoff for BoxCutoff {
    fn value(&self, u: f64, v: f64) -> f64 {
        smooth_step(u / self.delta) * smooth_step(v.abs() / self.delta)
    }

    fn u_taylor(&self, v: f64) -> [f64; 3] {
        [smooth_step(v.abs() / self.delta), 0.0, 0.0]
    }

    fn flat_below(&self) -> f64 {
        self.delta
    }

    fn reach(&self) -> f64 {
        2.0 * self.delta
    }

    fn kinks(&self) -> Vec<f64> {
        vec![self.delta, 2.0 * self.delta]
    }
}

/// `outer - inner`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Annulus {
    /// Inner cutoff.
    pub inner: BoxCutoff,
    /// Outer cutoff, equal to 1 on the support of `inner`.
    pub outer: BoxCutoff,
}

impl Cutoff for Annulus {
    fn value(&self, u: f64, v: f64) -> f64 {
        self.outer.value(u, v) - self.inner.value(u, v)
    }

    fn u_taylor(&self, v: f64) -> [f64; 3] {
        let (a, b) = (self.outer.u_taylor(v), self.inner.u_taylor(v));
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    fn flat_below(&self) -> f64 {
        self.inner.flat_below().min(self.outer.flat_below())
    }

    fn reach(&self) -> f64 {
        self.outer.reach()
    }

    fn kinks(&self) -> Vec<f64> {
        let mut k = self.inner.kinks();
        k.extend(self.outer.kinks());
        k
    }
}

/// The three cutoffs attached to `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSet {
    /// `χ`, supported near the pinching point.
    pub near: BoxCutoff,
    /// `Ξθ = Ξ - χ`.
    pub far: Annulus,
    /// `Ξ`.
    pub total: BoxCutoff,
}

impl CutoffSet {
    /// Cutoffs for a given `δ`.
    pub fn new(delta: f64) -> Self {
        let near = BoxCutoff { delta };
        let total = BoxCutoff { delta: 2.0 * delta };
        Self { near, far: Annulus { inner: near, outer: total }, total }
    }

    /// `θ = 1 - χ`: zero for `u, |v| ≤ δ`, identically 1 outside the
    /// 2δ-box. The far weight is `Ξθ`.
    pub fn theta(&self, u: f64, v: f64) -> f64 {
        1.0 - self.near.value(u, v)
    }
}

/// `mean + Σ_k cos_k cos(4πkw) + sin_k sin(4πkw)`: boundary values of the
/// conformal factor at `v = ±v_max`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigData {
    /// Constant term.
    pub mean: f64,
    /// Cosine coefficients, `k = 1, 2, ...`.
    pub cos: Vec<f64>,
    /// Sine coefficients, `k = 1, 2, ...`.
    pub sin: Vec<f64>,
}

impl TrigData {
    /// Value at `w`.
    pub fn eval(&self, w: f64) -> f64 {
        let c: f64 = self
            .cos
            .iter()
            .enumerate()
            .map(|(k, a)| a * (4.0 * PI * (k + 1) as f64 * w).cos())
            .sum();
        let s: f64 = self
            .sin
            .iter()
            .enumerate()
            .map(|(k, b)| b * (4.0 * PI * (k + 1) as f64 * w).sin())
            .sum();
        self.mean + c + s
    }
}

/// Cusp-local family around one degenerating generator.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicFamily {
    ell: Profile,
    nu: Profile,
    data: TrigData,
    grid: Vec<f64>,
    delta: f64,
}

impl CyclicFamily {
    /// Validate and build. `ℓ` must be positive on the grid, non-negative
    /// at 0 (positive for a frozen family) and below `δ`; the grid must be
    /// strictly decreasing and positive.
    pub fn new(ell: Profile, nu: Profile, data: TrigData, grid: Vec<f64>, delta: f64) -> Result<Self, Error> {
        if grid.len() < 2 || grid.iter().any(|e| !(*e > 0.0)) || grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput("eps grid must be positive and strictly decreasing"));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidInput("delta must be positive"));
        }
        let e0 = ell.eval(0.0);
        if !(e0 >= 0.0 && e0 < delta) {
            return Err(Error::NotAdmissible { eps: 0.0 });
        }
        for &e in &grid {
            let l = ell.eval(e);
            if !(l > 0.0 && l < delta) || !nu.eval(e).is_finite() {
                return Err(Error::NotAdmissible { eps: e });
            }
        }
        if !nu.eval(0.0).is_finite() || !data.eval(0.0).is_finite() {
            return Err(Error::InvalidInput("nu and boundary data must be finite"));
        }
        Ok(Self { ell, nu, data, grid, delta })
    }

    /// `ℓ(ε)`.
    pub fn ell(&self, eps: f64) -> f64 {
        self.ell.eval(eps)
    }

    /// `ν(ε)`.
    pub fn nu(&self, eps: f64) -> f64 {
        self.nu.eval(eps)
    }

    /// Boundary values at `v = ±v_max`.
    pub fn data(&self) -> &TrigData {
        &self.data
    }

    /// The ε grid (decreasing).
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// `δ`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Cutoffs for this family.
    pub fn cutoffs(&self) -> CutoffSet {
        CutoffSet::new(self.delta)
    }
}

/// Solved conformal factor on the collar.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartField {
    /// `ℓ > 0`.
    Neck(ConformalFactor),
    /// `ℓ = 0`.
    Cusp(CuspLimit),
}

/// HJ boundary data `φ + offset` from a [`ChartField`]; NaN outside the
/// chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    /// Conformal factor relative to `h_L`.
    pub field: ChartField,
    /// `½ log(1+ν²)`, converting to `h_ℓ`.
    pub offset: f64,
}

impl BoundaryData for ModelData {
    fn eval(&self, v: f64, w: f64) -> (f64, f64, f64) {
        let s = match &self.field {
            ChartField::Neck(f) => f.sample(v, w),
            ChartField::Cusp(c) => c.sample(v, w),
        };
        match s {
            Some((f, a, b)) => (f + self.offset, a, b),
            None => (f64::NAN, f64::NAN, f64::NAN),
        }
    }
}

/// Everything known at one `ε` before volumes are computed.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsState {
    /// `ε` (0 for the limit).
    pub eps: f64,
    /// `ℓ(ε)`.
    pub ell: f64,
    /// `ν(ε)`.
    pub nu: f64,
    /// HJ data.
    pub data: ModelData,
    /// Newton iterations of the uniformization (summed over charts).
    pub newton_iterations: usize,
    /// Largest final scaled Liouville residual.
    pub newton_residual: f64,
}

/// Uniformize the collar at `ε`.
pub fn prepare(fam: &CyclicFamily, eps: f64, collar: &CollarSettings) -> Result<EpsState, Error> {
    if 4.0 * fam.delta > collar.v_max {
        return Err(Error::InvalidInput("outer cutoff must fit inside the collar chart"));
    }
    let (ell, nu) = (fam.ell(eps), fam.nu(eps));
    let bdry = |w: f64| fam.data.eval(w);
    let (field, it, res) = if ell > 0.0 {
        let f = solve_neck(ell, nu, &bdry, collar)?;
        let (it, res) = (f.iterations, f.residual);
        (ChartField::Neck(f), it, res)
    } else {
        let c = solve_cusp_limit(nu, &bdry, collar)?;
        let it = c.pos.iterations + c.neg.iterations;
        let res = c.pos.residual.max(c.neg.residual);
        (ChartField::Cusp(c), it, res)
    };
    Ok(EpsState {
        eps,
        ell,
        nu,
        data: ModelData { field, offset: 0.5 * (1.0 + nu * nu).ln() },
        newton_iterations: it,
        newton_residual: res,
    })
}

/// Settings of the direct finite part.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSettings {
    /// Split level `U_c` between layer and bulk.
    pub u_split: f64,
    /// Top of the HJ profile interval.
    pub top: f64,
    /// Chebyshev levels per column.
    pub levels: usize,
    /// Regularization parameters (geometric).
    pub eps: Vec<f64>,
    /// Extra powers in the finite-part basis.
    pub extra_powers: Vec<i32>,
    /// Gauss nodes per `v` panel for the HJ columns.
    pub v_nodes: usize,
    /// Trapezoid nodes in `w` for the HJ columns.
    pub w_nodes: usize,
    /// Gauss nodes per panel in the bulk integrals.
    pub bulk_nodes: usize,
    /// Ratio of the geometric `v` panels.
    pub ratio: f64,
    /// Innermost `|v|` break at `ℓ = 0` for the HJ columns.
    pub column_floor: f64,
    /// Innermost `|v|` break at `ℓ = 0` for the bulk.
    pub bulk_floor: f64,
    /// Flow-map inversion settings. Columns with `|v| + ℓ < 0.01` use the
    /// `v` difference step `1e-4 (|v| + ℓ)` and an absolute integrator
    /// tolerance scaled by `100 (|v| + ℓ)`.
    pub inversion: InversionOptions,
}

impl Default for LayerSettings {
    fn default() -> Self {
        Self {
            u_split: 0.05,
            top: 0.04,
            levels: 12,
            eps: geometric_sequence(0.016, 0.5, 9),
            extra_powers: vec![2, 3],
            v_nodes: 8,
            w_nodes: 8,
            bulk_nodes: 16,
            ratio: 0.5,
            column_floor: 1e-4,
            bulk_floor: 1e-12,
            inversion: InversionOptions::default(),
        }
    }
}

/// Settings of the region decomposition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSettings {
    /// Gauss nodes per panel.
    pub nodes: usize,
    /// Trapezoid nodes in `w`.
    pub w_nodes: usize,
    /// Ratio of geometric panels.
    pub ratio: f64,
    /// Innermost `|v|` break of `R₃` at `ℓ = 0`.
    pub floor: f64,
    /// Samples of the partition audit.
    pub audit_samples: usize,
}

impl Default for RegionSettings {
    fn default() -> Self {
        Self { nodes: 16, w_nodes: 16, ratio: 0.5, floor: 1e-10, audit_samples: 4096 }
    }
}

/// All settings of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSettings {
    /// Uniformization.
    pub collar: CollarSettings,
    /// Direct finite parts.
    pub layer: LayerSettings,
    /// Region decomposition.
    pub regions: RegionSettings,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            collar: CollarSettings { n_w: 16, ..CollarSettings::default() },
            layer: LayerSettings::default(),
            regions: RegionSettings::default(),
        }
    }
}

/// Panel breaks on `[0, reach]`: geometric towards `lower` (then `0`),
/// plus `ℓ/2` when `ℓ > 0`, plus the cutoff kinks.
fn positive_breaks(ell: f64, reach: f64, floor: f64, ratio: f64, kinks: &[f64]) -> Vec<f64> {
    let lower = if ell > 0.0 { ell } else { floor };
    let mut b = vec![0.0, lower, reach];
    if ell > 0.0 {
        b.push(0.5 * ell);
    }
    let mut x = reach * ratio;
    while x > lower {
        b.push(x);
        x *= ratio;
    }
    b.extend(kinks.iter().copied().filter(|k| *k > lower && *k < reach));
    merge_breaks(b)
}

/// Symmetric breaks on `[-reach, reach]`.
fn symmetric_breaks(pos: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = pos.iter().rev().map(|x| -x).collect();
    b.extend(pos.iter().skip(1).copied());
    b
}

/// `∫₀¹ t⁻³(f(t) - c₀ - c₁t - c₂t²) dt - c₀/2 - c₁`: the Hadamard finite
/// part of `∫₀¹ t⁻³ f(t) dt` given the Taylor coefficients `c` of `f`.
pub fn hadamard_unit<F: Fn(f64) -> f64>(f: F, c: [f64; 3], gl: &GaussLegendre, kinks: &[f64]) -> f64 {
    let mut b = vec![0.0, 0.5, 1.0];
    b.extend(kinks.iter().copied().filter(|k| *k > 0.0 && *k < 1.0));
    let b = merge_breaks(b);
    let body = gl.integrate_panels(&b, |t| (f(t) - c[0] - t * (c[1] + t * c[2])) / (t * t * t));
    body - 0.5 * c[0] - c[1]
}

/// Finite parts of one cutoff, direct route.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectFp {
    /// Total finite part.
    pub value: f64,
    /// Bulk above `U_c` plus `A(U_c)` times the boundary integral of `χ`.
    pub bulk: f64,
    /// Fit of the ε-dependent layer term.
    pub layer: FinitePartResult,
}

/// `W ∫ dv [A(U_c)χ(0,v) + ∫_{u_c(v)} χ R²/u³ du]`.
fn bulk_part<C: Cutoff + ?Sized>(cut: &C, ell: f64, s: &LayerSettings) -> Result<f64, Error> {
    let uc = s.u_split;
    let reach = cut.reach();
    let f = cut.flat_below();
    let k = uc / (1.0 - uc * uc).sqrt();
    if k * (reach * reach + ell * ell).sqrt() >= f {
        return Err(Error::InvalidInput("split level reaches the non-flat part of the cutoff"));
    }
    let gl = GaussLegendre::new(s.bulk_nodes);
    let kinks = cut.kinks();
    let mut ub = vec![f, reach];
    ub.extend(kinks.iter().copied().filter(|x| *x > f && *x < reach));
    let ub = merge_breaks(ub);
    let a_uc = layer_antiderivative(uc);
    let inner = |v: f64| {
        let r2 = v * v + ell * ell;
        let u_c = k * r2.sqrt();
        let chi0 = cut.value(0.0, v);
        let flat = chi0 * (a_uc + (f / u_c).ln() + 0.5 * r2 * (1.0 / (u_c * u_c) - 1.0 / (f * f)));
        let rest = gl.integrate_panels(&ub, |u| cut.value(u, v) * (u * u + r2) / (u * u * u));
        flat + rest
    };
    let vb = symmetric_breaks(&positive_breaks(ell, reach, s.bulk_floor, s.ratio, &kinks));
    Ok(W_PERIOD * gl.integrate_panels(&vb, inner))
}

/// Direct finite parts of several cutoffs sharing one set of HJ columns.
pub fn direct_fp(state: &EpsState, cuts: &[&dyn Cutoff], s: &LayerSettings) -> Result<Vec<DirectFp>, Error> {
    let reach = cuts.iter().map(|c| c.reach()).fold(0.0, f64::max);
    let kinks: Vec<f64> = cuts.iter().flat_map(|c| c.kinks()).collect();
    let params = CuspParams::new(state.ell, state.nu, 1.0)?;
    let ham = CuspHamiltonian::new(&params);
    let gl = GaussLegendre::new(s.v_nodes);
    let vb = symmetric_breaks(&positive_breaks(state.ell, reach, s.column_floor, s.ratio, &kinks));
    let hw = W_PERIOD / s.w_nodes as f64;
    let mut layers: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); s.eps.len()]; cuts.len()];
    for p in vb.windows(2) {
        let (vs, ws) = gl.mapped(p[0], p[1]);
        for (v, wv) in vs.iter().zip(&ws) {
            let chis: Vec<f64> = cuts.iter().map(|c| c.value(0.0, *v)).collect();
            if chis.iter().all(|x| *x == 0.0) {
                continue;
            }
            let mut opts = s.inversion;
            let scale = v.abs() + state.ell;
            if scale < 1e-2 {
                opts.fd_step[0] = 1e-4 * scale;
                opts.ode.atol *= 1e2 * scale;
            }
            for k in 0..s.w_nodes {
                let w = k as f64 * hw;
                let prof = OmegaProfile::solve(&ham, &state.data, [*v, w], s.top, s.levels, &opts)?;
                for (e, eps) in s.eps.iter().enumerate() {
                    let a = layer_antiderivative(prof.level_of(*eps)?);
                    for (c, chi) in chis.iter().enumerate() {
                        layers[c][e].push(-wv * hw * chi * a);
                    }
                }
            }
        }
    }
    let mut out = Vec::with_capacity(cuts.len());
    for (c, cut) in cuts.iter().enumerate() {
        let samples: Vec<(f64, f64)> = s.eps.iter().zip(&layers[c]).map(|(e, t)| (*e, pairwise_sum(t))).collect();
        let layer = finite_part_fit_with(&samples, &s.extra_powers)?;
        let bulk = bulk_part(*cut, state.ell, s)?;
        out.push(DirectFp { value: bulk + layer.a0, bulk, layer });
    }
    Ok(out)
}

/// `θ`-weighted finite part far from the pinching point.
pub fn run_far(state: &EpsState, cuts: &CutoffSet, s: &LayerSettings) -> Result<DirectFp, Error> {
    Ok(direct_fp(state, &[&cuts.far], s)?.remove(0))
}

/// The three regions of the near-cusp chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// `ℓ ≤ u ≤ D`, `|v| ≤ u`.
    R1,
    /// `u ≤ ℓ`, `|v| ≤ ℓ`.
    R2,
    /// `ℓ ≤ |v| ≤ D`, `u ≤ |v|`.
    R3,
}

/// Membership of `(u, v)` in each region. The boundaries are assigned
/// so that the regions partition `(0, D] × [-D, D]` exactly: `R₂` is
/// closed, `R₁` takes `u > ℓ, |v| ≤ u`, `R₃` takes `|v| > max(ℓ, u)`.
pub fn region_indicators(u: f64, v: f64, ell: f64, d: f64) -> [bool; 3] {
    let a = v.abs();
    [
        ell < u && u <= d && a <= u,
        u <= ell && a <= ell,
        ell < a && a <= d && u < a,
    ]
}

/// Outcome of the partition audit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionAudit {
    /// Points checked.
    pub samples: usize,
    /// Points in more than one region.
    pub overlaps: usize,
    /// Points in no region.
    pub gaps: usize,
}

impl PartitionAudit {
    /// Whether the indicators sum to one at every sample.
    pub fn passed(&self) -> bool {
        self.overlaps == 0 && self.gaps == 0
    }
}

fn radical_inverse(mut k: usize, base: usize) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut x = 0.0;
    while k > 0 {
        x += (k % base) as f64 * inv;
        k /= base;
        inv /= base as f64;
    }
    x
}

/// Check on Halton points of `(0, D] × [-D, D]` that the region
/// indicators sum to one.
pub fn partition_audit<F>(ell: f64, d: f64, samples: usize, indicators: F) -> PartitionAudit
where
    F: Fn(f64, f64, f64, f64) -> [bool; 3],
{
    let mut audit = PartitionAudit { samples, overlaps: 0, gaps: 0 };
    for k in 1..=samples {
        let u = d * radical_inverse(k, 2);
        let v = d * (2.0 * radical_inverse(k, 3) - 1.0);
        match indicators(u, v, ell, d).iter().filter(|b| **b).count() {
            0 => audit.gaps += 1,
            1 => {}
            _ => audit.overlaps += 1,
        }
    }
    audit
}

/// Region contributions to the near-cusp finite part.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RegionPieces {
    /// `R₁` (finite volume).
    pub r1: f64,
    /// Hadamard part on `R₂`.
    pub a1: f64,
    /// Residue with `a₀ + a₂` on `R₂`.
    pub a2: f64,
    /// Defining-function residue on `R₂`.
    pub a3: f64,
    /// Hadamard part on `R₃`.
    pub i1: f64,
    /// Residue with `a₀ + a₂` on `R₃`.
    pub i2: f64,
    /// Defining-function residue on `R₃`.
    pub i3: f64,
}

impl RegionPieces {
    /// `A₁ + A₂ + A₃`.
    pub fn r2(&self) -> f64 {
        self.a1 + self.a2 + self.a3
    }

    /// `I₁ + I₂ + I₃`.
    pub fn r3(&self) -> f64 {
        self.i1 + self.i2 + self.i3
    }

    /// Sum over all regions.
    pub fn sum(&self) -> f64 {
        self.r1 + self.r2() + self.r3()
    }
}

/// `(a₀ + a₂, a₀)` averaged over `w` at `v`.
fn boundary_means<D: BoundaryData + ?Sized>(data: &D, ell: f64, nu: f64, v: f64, n_w: usize) -> (f64, f64) {
    let mut s02 = 0.0;
    let mut s0 = 0.0;
    for k in 0..n_w {
        let w = k as f64 * W_PERIOD / n_w as f64;
        let (a0, pv, pw) = data.eval(v, w);
        s02 += a0 + a2_closed_form(ell, nu, v, pv, pw);
        s0 += a0;
    }
    (s02 / n_w as f64, s0 / n_w as f64)
}

/// Near-cusp finite part `FP ∫ χ ρ^z dvol` by region decomposition.
/// Rejects partitions that fail the audit.
pub fn run_near<C: Cutoff + ?Sized>(state: &EpsState, cut: &C, s: &RegionSettings) -> Result<RegionPieces, Error> {
    let d = cut.reach();
    let ell = state.ell;
    if !(ell < d) {
        return Err(Error::InvalidInput("ell must be smaller than the cutoff reach"));
    }
    if !partition_audit(ell, d, s.audit_samples, region_indicators).passed() {
        return Err(Error::InvalidInput("region partition double counts or leaves gaps"));
    }
    let gl = GaussLegendre::new(s.nodes);
    let kinks = cut.kinks();
    let mut out = RegionPieces::default();

    // R₁ in (u, V).
    let mut ub = vec![ell, d];
    ub.extend(kinks.iter().copied().filter(|k| *k > ell && *k < d));
    if ell > 0.0 {
        let mut x = ell / s.ratio;
        while x < d {
            ub.push(x);
            x /= s.ratio;
        }
    }
    let ub = merge_breaks(ub);
    let vb = [-1.0, -0.5, 0.0, 0.5, 1.0];
    out.r1 = W_PERIOD
        * gl.integrate_panels(&ub, |u| {
            let mut b = vb.to_vec();
            for k in &kinks {
                let x = k / u;
                if x < 1.0 {
                    b.push(x);
                    b.push(-x);
                }
            }
            let b = merge_breaks(b);
            gl.integrate_panels(&b, |big_v| cut.value(u, big_v * u) * (1.0 + big_v * big_v + (ell / u).powi(2)))
        });

    // R₂ in (ũ, ṽ).
    if ell > 0.0 {
        let ukinks: Vec<f64> = kinks.iter().map(|k| k / ell).collect();
        let (mut a1, mut a2, mut a3) = (0.0, 0.0, 0.0);
        let mut terms = [Vec::new(), Vec::new(), Vec::new()];
        for p in vb.windows(2) {
            let (xs, ws) = gl.mapped(p[0], p[1]);
            for (vt, wt) in xs.iter().zip(&ws) {
                let v = ell * vt;
                let sv = 1.0 + vt * vt;
                let [c0, c1, c2] = cut.u_taylor(v);
                let coeffs = [ell * c0 * sv, ell * ell * c1 * sv, ell * (c0 + ell * ell * c2 * sv)];
                let h = hadamard_unit(|t| ell * cut.value(ell * t, v) * (sv + t * t), coeffs, &gl, &ukinks);
                let (m02, m0) = boundary_means(&state.data, ell, state.nu, v, s.w_nodes);
                terms[0].push(wt * h);
                terms[1].push(wt * ell * (c0 * m02 + ell * ell * c2 * m0 * sv));
                terms[2].push(wt * (-0.5) * ell * (c0 * (sv.ln() + 1.0) + ell * ell * c2 * sv * sv.ln()));
            }
        }
        a1 += pairwise_sum(&terms[0]);
        a2 += pairwise_sum(&terms[1]);
        a3 += pairwise_sum(&terms[2]);
        out.a1 = W_PERIOD * a1;
        out.a2 = W_PERIOD * a2;
        out.a3 = W_PERIOD * a3;
    }

    // R₃ in (û, v).
    let pos = positive_breaks(ell, d, s.floor, s.ratio, &kinks);
    let pos: Vec<f64> = if ell > 0.0 { pos.into_iter().filter(|x| *x >= ell).collect() } else { pos };
    let mut terms = [Vec::new(), Vec::new(), Vec::new()];
    for sign in [1.0, -1.0] {
        for p in pos.windows(2) {
            let (xs, ws) = gl.mapped(p[0], p[1]);
            for (a, wt) in xs.iter().zip(&ws) {
                let v = sign * a;
                let sv = 1.0 + (ell / a).powi(2);
                let r2 = a * a + ell * ell;
                let [c0, c1, c2] = cut.u_taylor(v);
                let coeffs = [c0 * sv, a * c1 * sv, c0 + a * a * c2 * sv];
                let ukinks: Vec<f64> = kinks.iter().map(|k| k / a).collect();
                let h = hadamard_unit(|t| cut.value(t * a, v) * (sv + t * t), coeffs, &gl, &ukinks);
                let (m02, m0) = boundary_means(&state.data, ell, state.nu, v, s.w_nodes);
                terms[0].push(wt * h);
                terms[1].push(wt * (c0 * m02 + c2 * r2 * m0));
                terms[2].push(wt * (-0.5) * (c0 * (sv.ln() + 1.0) + c2 * r2 * sv.ln()));
            }
        }
    }
    out.i1 = W_PERIOD * pairwise_sum(&terms[0]);
    out.i2 = W_PERIOD * pairwise_sum(&terms[1]);
    out.i3 = W_PERIOD * pairwise_sum(&terms[2]);
    Ok(out)
}

/// Probe columns for the far-field HJ stability check.
pub const PROBE_V: [f64; 2] = [-0.5, 0.5];

/// One `ε` of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsRecord {
    /// `ε`.
    pub eps: f64,
    /// `ℓ(ε)`.
    pub ell: f64,
    /// `ν(ε)`.
    pub nu: f64,
    /// Direct finite part with the window `Ξ`.
    pub vol_r: f64,
    /// Direct finite part with `θ`.
    pub far: f64,
    /// Direct finite part with `χ`.
    pub near_direct: f64,
    /// Region decomposition of the near piece.
    pub regions: RegionPieces,
    /// `|regions - near_direct| / |near_direct|`.
    pub region_residual: f64,
    /// `|far + near_direct - vol_r| / |vol_r|`.
    pub additivity_residual: f64,
    /// Largest error estimate of the three layer fits.
    pub fit_error: f64,
    /// Uniformization Newton iterations.
    pub newton_iterations: usize,
    /// Uniformization residual.
    pub newton_residual: f64,
    /// `ω` at the Chebyshev levels of the probe columns.
    pub probe_omega: Vec<f64>,
}

fn probe_omega(state: &EpsState, s: &LayerSettings) -> Result<Vec<f64>, Error> {
    let params = CuspParams::new(state.ell, state.nu, 1.0)?;
    let ham = CuspHamiltonian::new(&params);
    let mut out = Vec::new();
    for v in PROBE_V {
        for k in 0..4 {
            let w = k as f64 * W_PERIOD / 4.0;
            let prof = OmegaProfile::solve(&ham, &state.data, [v, w], s.top, s.levels, &s.inversion)?;
            let n = s.levels;
            for j in 0..n {
                let t = 0.5 * s.top * (1.0 - (PI * j as f64 / (n - 1) as f64).cos());
                out.push(prof.eval(t));
            }
        }
    }
    Ok(out)
}

/// Full pipeline at one `ε` (use `0.0` for the limit).
pub fn run_at(fam: &CyclicFamily, eps: f64, s: &SweepSettings) -> Result<EpsRecord, Error> {
    let state = prepare(fam, eps, &s.collar)?;
    let cuts = fam.cutoffs();
    let d = direct_fp(&state, &[&cuts.total, &cuts.far, &cuts.near], &s.layer)?;
    let regions = run_near(&state, &cuts.near, &s.regions)?;
    let (vol_r, far, near) = (d[0].value, d[1].value, d[2].value);
    Ok(EpsRecord {
        eps,
        ell: state.ell,
        nu: state.nu,
        vol_r,
        far,
        near_direct: near,
        regions,
        region_residual: (regions.sum() - near).abs() / near.abs(),
        additivity_residual: (far + near - vol_r).abs() / vol_r.abs(),
        fit_error: d.iter().map(|x| x.layer.error_estimate()).fold(0.0, f64::max),
        newton_iterations: state.newton_iterations,
        newton_residual: state.newton_residual,
        probe_omega: probe_omega(&state, &s.layer)?,
    })
}

/// Result of a sweep: one entry per grid point plus the limit.
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerationRun {
    /// Per-ε outcomes, in grid order.
    pub records: Vec<Result<EpsRecord, Error>>,
    /// The `ε = 0` record.
    pub limit: Result<EpsRecord, Error>,
}

impl DegenerationRun {
    /// `|Vol_R(ε) - Vol_R(0)|` per grid point, `None` where a stage failed.
    pub fn gaps(&self) -> Vec<Option<f64>> {
        let l = match &self.limit {
            Ok(r) => r.vol_r,
            Err(_) => return vec![None; self.records.len()],
        };
        self.records.iter().map(|r| r.as_ref().ok().map(|r| (r.vol_r - l).abs())).collect()
    }

    /// Whether the last `n` gaps exist and do not increase.
    pub fn last_gaps_non_increasing(&self, n: usize) -> bool {
        let g = self.gaps();
        if g.len() < n {
            return false;
        }
        let tail: Option<Vec<f64>> = g[g.len() - n..].iter().copied().collect();
        match tail {
            Some(t) => t.windows(2).all(|p| p[1] <= p[0]),
            None => false,
        }
    }

    /// Gap at the smallest `ε`.
    pub fn final_gap(&self) -> Option<f64> {
        self.gaps().last().copied().flatten()
    }

    /// Largest region residual over the grid and the limit.
    pub fn max_region_residual(&self) -> Option<f64> {
        let mut worst: f64 = 0.0;
        for r in self.records.iter().chain(core::iter::once(&self.limit)) {
            worst = worst.max(r.as_ref().ok()?.region_residual);
        }
        Some(worst)
    }

    /// `max |ω_ε - ω_0|` on the probe columns, per grid point.
    pub fn probe_shifts(&self) -> Vec<Option<f64>> {
        let l = match &self.limit {
            Ok(r) => &r.probe_omega,
            Err(_) => return vec![None; self.records.len()],
        };
        self.records
            .iter()
            .map(|r| {
                r.as_ref()
                    .ok()
                    .map(|r| r.probe_omega.iter().zip(l).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            })
            .collect()
    }
}

/// Run every grid point and the limit; failures are recorded per `ε`.
pub fn run_sweep(fam: &CyclicFamily, s: &SweepSettings) -> DegenerationRun {
    DegenerationRun {
        records: fam.grid().iter().map(|e| run_at(fam, *e, s)).collect(),
        limit: run_at(fam, 0.0, s),
    }
}
