// SPDX-License-Identifier: MIT OR Apache-2.0

//! Curvature -1 conformal factors on collar charts.
//!
//! A collar carries `h = e^{2σ} h_L` with
//! `h_L = (1+ν²)(dv²/(v²+ℓ²) + (v²+ℓ²)(1+ν²)dw² + 2ν dv dw)` and `w` of
//! period 1/2. The factor `φ` making `e^{2φ}h` hyperbolic solves
//! `2Δ_hφ + 2e^{2φ} + R_h = 0` (positive Laplacian, `R = 2K`). Multiplying
//! by `e^{2σ}/2` gives the equivalent form
//! `Δ_L(φ + σ) + e^{2(φ+σ)} - 1 = 0`, which is what the solver discretizes.
//!
//! Coordinates: `v = ℓ sinh ξ` across the neck when `ℓ > 0`, and
//! `v = ±e^ξ` on the two half-collars of the cusp limit `ℓ = 0`. In both
//! cases `v² + ℓ² = (dv/dξ)²`, and
//! `Δ_L = -(∂²_ξ + τ∂_ξ - 2ν/((1+ν²)V′) ∂_ξ∂_w + ∂²_w/((1+ν²)V′²))` with
//! `V′ = dv/dξ` and `τ = ∂_ξ log|V′|`.
//!
//! The discretization is fourth order in `ξ` and Fourier (spectral) in
//! the periodic variable `w`, on a tensor grid.
//! The nonlinear system is solved by damped Newton with a banded LU.
//! The cusp end of a half-collar uses the far-field condition
//! `∂_ξφ = e^φ - 1`, which every profile `-log(1 + a|v|)` satisfies.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::Matrix2;

use crate::cusp_model::W_PERIOD;
use crate::geometry::{gaussian_curvature, CurvatureFd, FnMetric};
use crate::numerics::banded::BandMatrix;
use crate::numerics::diff::{D1_CENTRAL, D1_EDGE, D1_NEAR_EDGE, D2_CENTRAL, D2_NEAR_EDGE};

use crate::numerics::quad::GaussLegendre;
use crate::numerics::pairwise_sum;
use crate::Error;

/// Shape of a collar chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CollarKind {
    /// `v = ℓ sinh ξ`, `ℓ > 0`.
    Neck,
    /// `v = sign · e^ξ` at `ℓ = 0`.
    Half {
        /// `+1` or `-1`.
        sign: f64,
    },
}

/// Tensor grid on a collar chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarGrid {
    /// Chart shape.
    pub kind: CollarKind,
    /// `ℓ` (zero for half-collars).
    pub ell: f64,
    /// `ν`.
    pub nu: f64,
    /// Lower end in `ξ`.
    pub xi0: f64,
    /// Upper end in `ξ`.
    pub xi1: f64,
    /// Nodes in `ξ`, ends included.
    pub n_xi: usize,
    /// Nodes in `w` over one period.
    pub n_w: usize,
}

impl CollarGrid {
    /// Neck chart covering `|v| ≤ v_max`.
    pub fn neck(ell: f64, nu: f64, v_max: f64, n_xi: usize, n_w: usize) -> Result<Self, Error> {
        if !(ell > 0.0) || !(v_max > 0.0) {
            return Err(Error::InvalidInput("neck chart needs ell > 0 and v_max > 0"));
        }
        let x = (v_max / ell).asinh();
        Self::checked(Self { kind: CollarKind::Neck, ell, nu, xi0: -x, xi1: x, n_xi, n_w })
    }

    /// Half-collar `v_min ≤ |v| ≤ v_max` on the side `sign`.
    pub fn half(sign: f64, nu: f64, v_min: f64, v_max: f64, n_xi: usize, n_w: usize) -> Result<Self, Error> {
        if !(v_min > 0.0 && v_max > v_min) || sign.abs() != 1.0 {
            return Err(Error::InvalidInput("half collar needs 0 < v_min < v_max and sign = ±1"));
        }
        Self::checked(Self {
            kind: CollarKind::Half { sign },
            ell: 0.0,
            nu,
            xi0: v_min.ln(),
            xi1: v_max.ln(),
            n_xi,
            n_w,
        })
    }

    fn checked(g: Self) -> Result<Self, Error> {
        if g.n_xi < 7 || g.n_w < 4 || g.n_w % 2 != 0 {
            return Err(Error::InvalidInput("collar grid needs n_xi >= 7 and an even n_w >= 4"));
        }
        if !g.nu.is_finite() {
            return Err(Error::InvalidInput("nu must be finite"));
        }
        Ok(g)
    }

    /// Number of unknowns.
    pub fn len(&self) -> usize {
        self.n_xi * self.n_w
    }

    /// Whether the grid is empty (never, after construction).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spacing in `ξ`.
    pub fn h_xi(&self) -> f64 {
        (self.xi1 - self.xi0) / (self.n_xi - 1) as f64
    }

    /// Spacing in `w`.
    pub fn h_w(&self) -> f64 {
        W_PERIOD / self.n_w as f64
    }

    /// `ξ` of node row `i`.
    pub fn xi(&self, i: usize) -> f64 {
        self.xi0 + i as f64 * self.h_xi()
    }

    /// `w` of node column `j`.
    pub fn w(&self, j: usize) -> f64 {
        j as f64 * self.h_w()
    }

    /// Flat index of node `(i, j)`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_w + j
    }

    /// `v(ξ)`.
    pub fn v_of(&self, xi: f64) -> f64 {
        match self.kind {
            CollarKind::Neck => self.ell * xi.sinh(),
            CollarKind::Half { sign } => sign * xi.exp(),
        }
    }

    /// `ξ(v)`, if `v` lies in the chart.
    pub fn xi_of(&self, v: f64) -> Option<f64> {
        let xi = match self.kind {
            CollarKind::Neck => (v / self.ell).asinh(),
            CollarKind::Half { sign } => {
                if v * sign <= 0.0 {
                    return None;
                }
                v.abs().ln()
            }
        };
        let slack = 1e-12 * (1.0 + xi.abs());
        (xi >= self.xi0 - slack && xi <= self.xi1 + slack).then_some(xi.clamp(self.xi0, self.xi1))
    }

    /// Signed `V′ = dv/dξ`.
    pub fn dv(&self, xi: f64) -> f64 {
        match self.kind {
            CollarKind::Neck => self.ell * xi.cosh(),
            CollarKind::Half { sign } => sign * xi.exp(),
        }
    }

    /// `τ = ∂_ξ log|V′|`.
    fn tau(&self, xi: f64) -> f64 {
        match self.kind {
            CollarKind::Neck => xi.tanh(),
            CollarKind::Half { .. } => 1.0,
        }
    }

    /// `h_L` in `(ξ, w)` coordinates.
    pub fn model_metric(&self, xi: f64) -> Matrix2<f64> {
        let k = 1.0 + self.nu * self.nu;
        let d = self.dv(xi);
        Matrix2::new(k, k * self.nu * d, k * self.nu * d, k * k * d * d)
    }

    /// `(c_ξξ, c_ξ, c_ξw, c_ww)` with `Δ_L = -(c_ξξ∂²_ξ + c_ξ∂_ξ + c_ξw∂_ξ∂_w + c_ww∂²_w)`.
    fn coefficients(&self, xi: f64) -> [f64; 4] {
        let k = 1.0 + self.nu * self.nu;
        let d = self.dv(xi);
        [1.0, self.tau(xi), -2.0 * self.nu / (k * d), 1.0 / (k * d * d)]
    }
}

/// `ξ` stencil for derivative order `order` at row `i`: first node and
/// weights (before division by `h^order`).
fn xi_stencil(i: usize, n: usize, order: usize) -> (usize, Vec<f64>) {
    let (central, near): (&[f64], &[f64]) = if order == 1 {
        (&D1_CENTRAL, &D1_NEAR_EDGE)
    } else {
        (&D2_CENTRAL, &D2_NEAR_EDGE)
    };
    if i == 0 || i == n - 1 {
        let mut w = D1_EDGE.to_vec();
        if i == 0 {
            return (0, w);
        }
        w.reverse();
        return (n - 5, w.iter().map(|x| -x).collect());
    }
    if i >= 2 && i + 2 < n {
        return (i - 2, central.to_vec());
    }
    if i == 1 {
        return (0, near.to_vec());
    }
    let mut w = near.to_vec();
    w.reverse();
    if order == 1 {
        w.iter_mut().for_each(|x| *x = -*x);
    }
    (n - 6, w)
}

fn wrap(j: isize, n: usize) -> usize {
    j.rem_euclid(n as isize) as usize
}

/// Circulant Fourier differentiation on `n` (even) equispaced nodes of
/// period `W_PERIOD`: entry `k` multiplies `u_{j-k}` in `(Du)_j`.
fn fourier_matrices(n: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 2.0 * core::f64::consts::PI / n as f64;
    let c = 2.0 * core::f64::consts::PI / W_PERIOD;
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    d2[0] = (-core::f64::consts::PI.powi(2) / (3.0 * h * h) - 1.0 / 6.0) * c * c;
    for k in 1..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let half = 0.5 * k as f64 * h;
        d1[k] = 0.5 * sign / half.tan() * c;
        d2[k] = -0.5 * sign / half.sin().powi(2) * c * c;
    }
    (d1, d2)
}

/// Conditions at the two ends of the chart.
#[derive(Debug, Clone, PartialEq)]
pub enum Boundary {
    /// Prescribed values at the `w` nodes.
    Dirichlet(Vec<f64>),
    /// Cusp far-field condition `∂_ξφ = e^φ - 1` (half-collar, lower end).
    CuspRobin,
}

/// A Liouville problem on one collar chart.
#[derive(Clone, Copy)]
pub struct LiouvilleProblem<'a> {
    /// Grid.
    pub grid: CollarGrid,
    /// Conformal exponent `σ(v, w)` of `h = e^{2σ}h_L`; `None` means `σ = 0`.
    pub sigma: Option<&'a dyn Fn(f64, f64) -> f64>,
    /// Condition at `ξ₀`.
    pub lower: &'a Boundary,
    /// Condition at `ξ₁`.
    pub upper: &'a Boundary,
}

impl core::fmt::Debug for LiouvilleProblem<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("LiouvilleProblem")
            .field("grid", &self.grid)
            .field("lower", self.lower)
            .field("upper", self.upper)
            .finish_non_exhaustive()
    }
}

/// Newton settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSettings {
    /// Target for the scaled residual.
    pub tol: f64,
    /// Iteration cap.
    pub max_iter: usize,
    /// Smallest damping factor tried.
    pub min_damping: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 50, min_damping: 1.0 / 1024.0 }
    }
}

/// Solution of a Liouville problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactor {
    /// Grid.
    pub grid: CollarGrid,
    /// Node values, `w` fastest.
    pub phi: Vec<f64>,
    /// Final scaled residual.
    pub residual: f64,
    /// Newton iterations used.
    pub iterations: usize,
    /// Scaled residual before each iteration and at the end.
    pub history: Vec<f64>,
}

struct Discretization {
    /// Rows of the discrete `Δ_L` (interior rows only; empty otherwise).
    rows: Vec<Vec<(usize, f64)>>,
    /// `Δ_Lσ - 1` per node, and `σ` per node.
    forcing: Vec<f64>,
    sigma: Vec<f64>,
    /// Residual normalization per row.
    scale: Vec<f64>,
    bandwidth: usize,
}

fn push(row: &mut Vec<(usize, f64)>, col: usize, w: f64) {
    if let Some(e) = row.iter_mut().find(|e| e.0 == col) {
        e.1 += w;
    } else {
        row.push((col, w));
    }
}

fn discretize(p: &LiouvilleProblem<'_>) -> Discretization {
    let g = &p.grid;
    let hx = g.h_xi();
    let n = g.len();
    let mut rows = vec![Vec::new(); n];
    let mut scale = vec![1.0; n];
    let mut bandwidth = 0;
    let sig = |xi: f64, w: f64| p.sigma.map_or(0.0, |s| s(g.v_of(xi), w));
    let (fd1, fd2) = fourier_matrices(g.n_w);
    let max_d1 = fd1.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut sigma = vec![0.0; n];
    let mut forcing = vec![-1.0; n];
    for i in 0..g.n_xi {
        let xi = g.xi(i);
        let [cxx, cx, cxw, cww] = g.coefficients(xi);
        for j in 0..g.n_w {
            let k = g.index(i, j);
            let w = g.w(j);
            sigma[k] = sig(xi, w);
            if i == 0 || i == g.n_xi - 1 {
                continue;
            }
            if p.sigma.is_some() {
                let h = 1e-3;
                let sxx = crate::numerics::diff::d2(|t| sig(t, w), xi, h);
                let sx = crate::numerics::diff::d1(|t| sig(t, w), xi, h);
                let sww = crate::numerics::diff::d2(|t| sig(xi, t), w, h);
                let sxw = crate::numerics::diff::d11(sig, xi, w, h, h);
                forcing[k] = -(cxx * sxx + cx * sx + cxw * sxw + cww * sww) - 1.0;
            }
            let row = &mut rows[k];
            let (s1, w1) = xi_stencil(i, g.n_xi, 1);
            let (s2, w2) = xi_stencil(i, g.n_xi, 2);
            for (m, c) in w2.iter().enumerate() {
                push(row, g.index(s2 + m, j), -cxx * c / (hx * hx));
            }
            for (m, c) in w1.iter().enumerate() {
                push(row, g.index(s1 + m, j), -cx * c / hx);
                for jj in 0..g.n_w {
                    let d = fd1[wrap(j as isize - jj as isize, g.n_w)];
                    push(row, g.index(s1 + m, jj), -cxw * c * d / hx);
                }
            }
            for jj in 0..g.n_w {
                push(row, g.index(i, jj), -cww * fd2[wrap(j as isize - jj as isize, g.n_w)]);
            }
            row.retain(|e| e.1 != 0.0);
            for e in row.iter() {
                bandwidth = bandwidth.max(e.0.abs_diff(k));
            }
            scale[k] = (1.0 / (hx * hx) + cww * fd2[0].abs() + cxw.abs() * max_d1 / hx) * hx * hx;
        }
    }
    // The cusp condition uses D1_EDGE across five rows.
    bandwidth = bandwidth.max(4 * g.n_w);
    Discretization { rows, forcing, sigma, scale, bandwidth }
}

fn residual(p: &LiouvilleProblem<'_>, d: &Discretization, phi: &[f64]) -> Vec<f64> {
    let g = &p.grid;
    let hx = g.h_xi();
    let mut out = vec![0.0; g.len()];
    for i in 0..g.n_xi {
        for j in 0..g.n_w {
            let k = g.index(i, j);
            let bc = if i == 0 {
                Some(p.lower)
            } else if i == g.n_xi - 1 {
                Some(p.upper)
            } else {
                None
            };
            out[k] = match bc {
                Some(Boundary::Dirichlet(vals)) => phi[k] - vals[j],
                Some(Boundary::CuspRobin) => {
                    let (s, w) = xi_stencil(i, g.n_xi, 1);
                    let dphi: f64 = w.iter().enumerate().map(|(m, c)| c * phi[g.index(s + m, j)]).sum::<f64>() / hx;
                    dphi - phi[k].exp_m1()
                }
                None => {
                    let lap: f64 = d.rows[k].iter().map(|(c, w)| w * phi[*c]).sum();
                    lap + (2.0 * (phi[k] + d.sigma[k])).exp() + d.forcing[k]
                }
            };
        }
    }
    out
}

fn scaled_norm(d: &Discretization, r: &[f64]) -> f64 {
    r.iter().zip(&d.scale).map(|(x, s)| (x / s).abs()).fold(0.0, f64::max)
}

/// Solve a Liouville problem by damped Newton from `φ = 0`.
pub fn solve_liouville(p: &LiouvilleProblem<'_>, settings: &NewtonSettings) -> Result<ConformalFactor, Error> {
    let g = &p.grid;
    for b in [p.lower, p.upper] {
        if let Boundary::Dirichlet(v) = b {
            if v.len() != g.n_w {
                return Err(Error::InvalidInput("Dirichlet data must have one value per w node"));
            }
        }
    }
    if matches!(p.upper, Boundary::CuspRobin) {
        return Err(Error::InvalidInput("the cusp condition is only available at the lower end"));
    }
    if matches!(p.lower, Boundary::CuspRobin) && !matches!(g.kind, CollarKind::Half { .. }) {
        return Err(Error::InvalidInput("the cusp condition needs a half-collar chart"));
    }
    let d = discretize(p);
    let interior = |k: usize| !d.rows[k].is_empty();
    if (0..g.len()).filter(|k| interior(*k)).all(|k| d.forcing[k] >= 0.0) {
        return Err(Error::NoHyperbolicRepresentative);
    }
    let mut phi = vec![0.0; g.len()];
    for (b, i) in [(p.lower, 0), (p.upper, g.n_xi - 1)] {
        if let Boundary::Dirichlet(v) = b {
            for j in 0..g.n_w {
                phi[g.index(i, j)] = v[j];
            }
        }
    }
    let mut r = residual(p, &d, &phi);
    let mut norm = scaled_norm(&d, &r);
    let mut history = vec![norm];
    let hx = g.h_xi();
    for it in 0..settings.max_iter {
        if norm < settings.tol {
            return Ok(ConformalFactor { grid: *g, phi, residual: norm, iterations: it, history });
        }
        let mut jac = BandMatrix::zeros(g.len(), d.bandwidth, d.bandwidth);
        for k in 0..g.len() {
            let (i, j) = (k / g.n_w, k % g.n_w);
            if interior(k) {
                for (c, w) in &d.rows[k] {
                    jac.add(k, *c, *w)?;
                }
                jac.add(k, k, 2.0 * (2.0 * (phi[k] + d.sigma[k])).exp())?;
            } else if i == 0 && matches!(p.lower, Boundary::CuspRobin) {
                let (s, w) = xi_stencil(i, g.n_xi, 1);
                for (m, c) in w.iter().enumerate() {
                    jac.add(k, g.index(s + m, j), c / hx)?;
                }
                jac.add(k, k, -phi[k].exp())?;
            } else {
                jac.add(k, k, 1.0)?;
            }
        }
        let lu = jac.factorize()?;
        let rhs: Vec<f64> = r.iter().map(|x| -x).collect();
        let step = lu.solve(&rhs)?;
        let mut alpha = 1.0;
        loop {
            let trial: Vec<f64> = phi.iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
            let rt = residual(p, &d, &trial);
            let nt = scaled_norm(&d, &rt);
            if nt < norm || alpha <= settings.min_damping {
                phi = trial;
                r = rt;
                norm = nt;
                break;
            }
            alpha *= 0.5;
        }
        history.push(norm);
        if !norm.is_finite() {
            break;
        }
    }
    if norm < settings.tol {
        let iterations = history.len() - 1;
        return Ok(ConformalFactor { grid: *g, phi, residual: norm, iterations, history });
    }
    Err(Error::NewtonDiverged { iterations: history.len() - 1, residual: norm })
}

fn lagrange(xs0: f64, h: f64, vals: &[f64], x: f64, order: usize) -> f64 {
    let n = vals.len();
    let m = order.min(n);
    let pos = (x - xs0) / h;
    let start = ((pos - 0.5 * (m as f64 - 1.0)).round().max(0.0) as usize).min(n - m);
    let mut acc = 0.0;
    for a in start..start + m {
        let mut l = 1.0;
        for b in start..start + m {
            if a != b {
                l *= (pos - b as f64) / (a as f64 - b as f64);
            }
        }
        acc += l * vals[a];
    }
    acc
}

/// Lagrange basis values and `pos`-derivatives on nodes `start..start+m`.
fn lagrange_basis(pos: f64, start: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut l = vec![0.0; m];
    let mut dl = vec![0.0; m];
    for a in 0..m {
        let xa = (start + a) as f64;
        let mut val = 1.0;
        let mut der = 0.0;
        for b in 0..m {
            if a == b {
                continue;
            }
            let xb = (start + b) as f64;
            let f = (pos - xb) / (xa - xb);
            der = der * f + val / (xa - xb);
            val *= f;
        }
        l[a] = val;
        dl[a] = der;
    }
    (l, dl)
}

/// Periodic cardinal functions of the `n` (even) equispaced nodes on
/// `[0, W_PERIOD)` and their `w`-derivatives at `w`.
pub(crate) fn trig_cardinals(n: usize, w: f64) -> (Vec<f64>, Vec<f64>) {
    let c = 2.0 * core::f64::consts::PI / W_PERIOD;
    let half = n / 2;
    let mut s = vec![0.0; n];
    let mut ds = vec![0.0; n];
    for j in 0..n {
        let th = c * (w - j as f64 * W_PERIOD / n as f64);
        let mut acc = 1.0;
        let mut dacc = 0.0;
        for k in 1..half {
            let (sn, cs) = (k as f64 * th).sin_cos();
            acc += 2.0 * cs;
            dacc -= 2.0 * k as f64 * sn;
        }
        let (sn, cs) = (half as f64 * th).sin_cos();
        acc += cs;
        dacc -= half as f64 * sn;
        s[j] = acc / n as f64;
        ds[j] = dacc * c / n as f64;
    }
    (s, ds)
}

/// Interpolation order in `ξ` used by [`ConformalFactor::sample`].
const SAMPLE_ORDER: usize = 8;

impl ConformalFactor {
    /// Sample a known function on a grid (for energy and comparison tests).
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: CollarGrid, f: F) -> Self {
        let mut phi = vec![0.0; grid.len()];
        for i in 0..grid.n_xi {
            for j in 0..grid.n_w {
                phi[grid.index(i, j)] = f(grid.v_of(grid.xi(i)), grid.w(j));
            }
        }
        Self { grid, phi, residual: 0.0, iterations: 0, history: Vec::new() }
    }

    /// Value at node `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.phi[self.grid.index(i, j)]
    }

    /// Sixth-order interpolation in `ξ` along the `w` node column `j`.
    pub fn interpolate_xi(&self, xi: f64, j: usize) -> f64 {
        let col: Vec<f64> = (0..self.grid.n_xi).map(|i| self.at(i, j)).collect();
        lagrange(self.grid.xi0, self.grid.h_xi(), &col, xi, 6)
    }

    /// Value at `(v, w_j)`, if `v` lies in the chart.
    pub fn at_v(&self, v: f64, j: usize) -> Option<f64> {
        self.grid.xi_of(v).map(|xi| self.interpolate_xi(xi, j))
    }

    /// `(v, w, φ)` for every node, `w` fastest.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        let g = &self.grid;
        (0..g.len())
            .map(|k| {
                let (i, j) = (k / g.n_w, k % g.n_w);
                (g.v_of(g.xi(i)), g.w(j), self.phi[k])
            })
            .collect()
    }

    /// `(∂_ξφ, ∂_wφ)` at node `(i, j)`.
    pub fn gradient(&self, i: usize, j: usize) -> (f64, f64) {
        let g = &self.grid;
        let (s, w) = xi_stencil(i, g.n_xi, 1);
        let dxi = w.iter().enumerate().map(|(m, c)| c * self.at(s + m, j)).sum::<f64>() / g.h_xi();
        let (fd1, _) = fourier_matrices(g.n_w);
        let dw = (0..g.n_w)
            .map(|m| fd1[wrap(j as isize - m as isize, g.n_w)] * self.at(i, m))
            .sum::<f64>();
        (dxi, dw)
    }

    /// `(φ, ∂_vφ, ∂_wφ)` at an arbitrary chart point: Lagrange
    /// interpolation of order 8 in `ξ`, trigonometric in `w`.
    pub fn sample(&self, v: f64, w: f64) -> Option<(f64, f64, f64)> {
        let g = &self.grid;
        let xi = g.xi_of(v)?;
        let m = SAMPLE_ORDER.min(g.n_xi);
        let pos = (xi - g.xi0) / g.h_xi();
        let start = ((pos - 0.5 * (m as f64 - 1.0)).round().max(0.0) as usize).min(g.n_xi - m);
        let (l, dl) = lagrange_basis(pos, start, m);
        let (t, dt) = trig_cardinals(g.n_w, w);
        let (mut f, mut fx, mut fw) = (0.0, 0.0, 0.0);
        for a in 0..m {
            let row = &self.phi[g.index(start + a, 0)..g.index(start + a, 0) + g.n_w];
            let r: f64 = row.iter().zip(&t).map(|(x, c)| x * c).sum();
            let dr: f64 = row.iter().zip(&dt).map(|(x, c)| x * c).sum();
            f += l[a] * r;
            fx += dl[a] * r;
            fw += l[a] * dr;
        }
        Some((f, fx / (g.h_xi() * g.dv(xi)), fw))
    }

    /// Largest node value.
    pub fn max(&self) -> f64 {
        self.phi.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest node value.
    pub fn min(&self) -> f64 {
        self.phi.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `∫_{ℝ/½ℤ}∫_{v_a}^{v_b} |dφ|²_{h_L} dv dw`.
pub fn collar_energy(phi: &ConformalFactor, v_a: f64, v_b: f64) -> Result<f64, Error> {
    let g = &phi.grid;
    let (xa, xb) = match (g.xi_of(v_a), g.xi_of(v_b)) {
        (Some(a), Some(b)) if a < b => (a, b),
        _ => return Err(Error::OutOfDomain("energy interval outside the chart")),
    };
    let k = 1.0 + g.nu * g.nu;
    let mut dens = vec![vec![0.0; g.n_xi]; g.n_w];
    for i in 0..g.n_xi {
        let d = g.dv(g.xi(i));
        for (j, col) in dens.iter_mut().enumerate() {
            let (px, pw) = phi.gradient(i, j);
            col[i] = (px * px - 2.0 * g.nu * px * pw / (k * d) + pw * pw / (k * d * d)) * d.abs();
        }
    }
    let gl = GaussLegendre::new(6);
    let h = g.h_xi();
    let first = ((xa - g.xi0) / h).floor() as usize;
    let last = (((xb - g.xi0) / h).ceil() as usize).min(g.n_xi - 1);
    let mut cols = Vec::with_capacity(g.n_w);
    for col in &dens {
        let mut parts = Vec::new();
        for c in first..last {
            let a = g.xi(c).max(xa);
            let b = g.xi(c + 1).min(xb);
            if b > a {
                parts.push(gl.integrate(a, b, |x| lagrange(g.xi0, h, col, x, 6)));
            }
        }
        cols.push(pairwise_sum(&parts));
    }
    Ok(pairwise_sum(&cols) * g.h_w())
}

/// Bounds from the maximum principle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich {
    /// `min φ` on the grid.
    pub min: f64,
    /// `max φ` on the grid.
    pub max: f64,
    /// `min(½ log(min(-R_h)/2), boundary values)`.
    pub lower: f64,
    /// `max(½ log(max(-R_h)/2), boundary values)`.
    pub upper: f64,
}

impl Sandwich {
    /// Whether the solution lies within the bounds up to `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.min >= self.lower - tol && self.max <= self.upper + tol
    }
}

/// Maximum-principle bounds for a solved problem.
pub fn sandwich(p: &LiouvilleProblem<'_>, phi: &ConformalFactor) -> Sandwich {
    let d = discretize(p);
    let g = &p.grid;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..g.len() {
        if d.rows[k].is_empty() {
            continue;
        }
        // -R_h/2 = e^{-2σ}(1 - Δ_Lσ).
        let q = -d.forcing[k] * (-2.0 * d.sigma[k]).exp();
        if q > 0.0 {
            let b = 0.5 * q.ln();
            lo = lo.min(b);
            hi = hi.max(b);
        }
    }
    for b in [p.lower, p.upper] {
        match b {
            Boundary::Dirichlet(v) => {
                for x in v {
                    lo = lo.min(*x);
                    hi = hi.max(*x);
                }
            }
            Boundary::CuspRobin => {
                lo = lo.min(0.0);
                hi = hi.max(0.0);
            }
        }
    }
    Sandwich { min: phi.min(), max: phi.max(), lower: lo, upper: hi }
}

/// Gaussian curvature of a 2D chart metric by finite differences.
pub fn chart_curvature<F: Fn(&[f64; 2]) -> Matrix2<f64>>(metric: F, pt: [f64; 2], scale: f64) -> f64 {
    gaussian_curvature(&FnMetric(metric), &pt, scale, CurvatureFd { step: 1e-3, richardson: true })
}

/// The cusp limit `ℓ = 0` on the two half-collars.
#[derive(Debug, Clone, PartialEq)]
pub struct CuspLimit {
    /// `v > 0` side.
    pub pos: ConformalFactor,
    /// `v < 0` side.
    pub neg: ConformalFactor,
}

impl CuspLimit {
    fn side(&self, v: f64) -> &ConformalFactor {
        if v > 0.0 {
            &self.pos
        } else {
            &self.neg
        }
    }

    /// Fitted `a` in `φ ≈ -log(1 + a|v|)` at the cusp end, at `w` node `j`.
    pub fn cusp_constant(&self, positive: bool, j: usize) -> f64 {
        let f = if positive { &self.pos } else { &self.neg };
        let v_min = f.grid.xi0.exp();
        (-f.at(0, j)).exp_m1() / v_min
    }

    /// `(φ₀, ∂_vφ₀, ∂_wφ₀)` at `v ≠ 0`, with the `-log(1 + a(w)|v|)`
    /// continuation inside `|v| < v_min` and `a(w)` interpolated
    /// trigonometrically.
    pub fn sample(&self, v: f64, w: f64) -> Option<(f64, f64, f64)> {
        if v == 0.0 {
            return None;
        }
        let f = self.side(v);
        let v_min = f.grid.xi0.exp();
        if v.abs() >= v_min {
            return f.sample(v, w);
        }
        let (t, dt) = trig_cardinals(f.grid.n_w, w);
        let mut a = 0.0;
        let mut da = 0.0;
        for j in 0..f.grid.n_w {
            let c = self.cusp_constant(v > 0.0, j);
            a += t[j] * c;
            da += dt[j] * c;
        }
        let q = 1.0 + a * v.abs();
        Some((-q.ln(), -a * v.signum() / q, -da * v.abs() / q))
    }

    /// `φ₀(v, w_j)`, continued by `-log(1 + a|v|)` inside `|v| < v_min`.
    pub fn value(&self, v: f64, j: usize) -> Option<f64> {
        let f = self.side(v);
        let v_min = f.grid.xi0.exp();
        if v.abs() < v_min {
            let a = self.cusp_constant(v > 0.0, j);
            return Some(-(a * v.abs()).ln_1p());
        }
        f.at_v(v, j)
    }
}

/// Settings for collar families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarSettings {
    /// Outer end `|v| = v_max` where the Dirichlet data sits.
    pub v_max: f64,
    /// Truncation of the half-collars at `|v| = v_min`.
    pub v_min: f64,
    /// Target spacing in `ξ`.
    pub h_xi: f64,
    /// Nodes in `w`.
    pub n_w: usize,
    /// Newton settings.
    pub newton: NewtonSettings,
}

impl Default for CollarSettings {
    fn default() -> Self {
        Self { v_max: 1.0, v_min: 0.02, h_xi: 0.02, n_w: 32, newton: NewtonSettings::default() }
    }
}

fn nodes_for(len: f64, h: f64) -> usize {
    ((len / h).ceil() as usize + 1).max(7)
}

/// Solve the `ℓ = 0` limit with Dirichlet data `data` at `|v| = v_max`.
pub fn solve_cusp_limit<B: Fn(f64) -> f64>(nu: f64, data: &B, s: &CollarSettings) -> Result<CuspLimit, Error> {
    let n = nodes_for((s.v_max / s.v_min).ln(), s.h_xi);
    let mut sides = Vec::with_capacity(2);
    for sign in [1.0, -1.0] {
        let grid = CollarGrid::half(sign, nu, s.v_min, s.v_max, n, s.n_w)?;
        let upper = Boundary::Dirichlet((0..s.n_w).map(|j| data(grid.w(j))).collect());
        let p = LiouvilleProblem { grid, sigma: None, lower: &Boundary::CuspRobin, upper: &upper };
        sides.push(solve_liouville(&p, &s.newton)?);
    }
    let neg = sides.pop().expect("two sides");
    let pos = sides.pop().expect("two sides");
    Ok(CuspLimit { pos, neg })
}

/// Solve the neck problem at `ℓ > 0` with data `data` at `v = ±v_max`.
pub fn solve_neck<B: Fn(f64) -> f64>(ell: f64, nu: f64, data: &B, s: &CollarSettings) -> Result<ConformalFactor, Error> {
    let n = nodes_for(2.0 * (s.v_max / ell).asinh(), s.h_xi);
    let grid = CollarGrid::neck(ell, nu, s.v_max, n, s.n_w)?;
    let vals: Vec<f64> = (0..s.n_w).map(|j| data(grid.w(j))).collect();
    let b = Boundary::Dirichlet(vals);
    let p = LiouvilleProblem { grid, sigma: None, lower: &b, upper: &b };
    solve_liouville(&p, &s.newton)
}

/// `sup |φ_ℓ - φ₀|` over the nodes of both solutions.
pub fn sup_distance(neck: &ConformalFactor, limit: &CuspLimit) -> f64 {
    let g = &neck.grid;
    let mut worst: f64 = 0.0;
    for i in 0..g.n_xi {
        let v = g.v_of(g.xi(i));
        for j in 0..g.n_w {
            if let Some(l) = limit.value(v, j) {
                worst = worst.max((neck.at(i, j) - l).abs());
            }
        }
    }
    for side in [&limit.pos, &limit.neg] {
        let h = &side.grid;
        for i in 0..h.n_xi {
            let v = h.v_of(h.xi(i));
            for j in 0..h.n_w {
                if let Some(x) = neck.at_v(v, j) {
                    worst = worst.max((x - side.at(i, j)).abs());
                }
            }
        }
    }
    worst
}

/// One row of [`degeneration_convergence`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollarRecord {
    /// `ℓ`.
    pub ell: f64,
    /// `sup |φ_ℓ - φ₀|`.
    pub sup_distance: f64,
    /// Collar energy over `|v| ≤ interval`.
    pub energy: f64,
    /// Half-width of the energy interval.
    pub interval: f64,
    /// Newton iterations.
    pub iterations: usize,
    /// Final scaled residual.
    pub residual: f64,
}

/// Solve the neck problem along `ells` and compare with the cusp limit.
/// The energy interval is `|v| ≤ sqrt(ℓ)`.
pub fn degeneration_convergence<B: Fn(f64) -> f64>(
    ells: &[f64],
    nu: f64,
    data: &B,
    s: &CollarSettings,
) -> Result<(CuspLimit, Vec<CollarRecord>), Error> {
    let limit = solve_cusp_limit(nu, data, s)?;
    let mut out = Vec::with_capacity(ells.len());
    for &ell in ells {
        let f = solve_neck(ell, nu, data, s)?;
        let r = ell.sqrt().min(s.v_max);
        out.push(CollarRecord {
            ell,
            sup_distance: sup_distance(&f, &limit),
            energy: collar_energy(&f, -r, r)?,
            interval: r,
            iterations: f.iterations,
            residual: f.residual,
        });
    }
    Ok((limit, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn bump(v: f64, w: f64) -> f64 {
        let q = 1.0 - v * v;
        if q <= 0.0 {
            return 0.0;
        }
        0.3 * q * q * q * (1.0 + 0.5 * (4.0 * PI * w).cos())
    }

    fn zero_dirichlet(n_w: usize) -> Boundary {
        Boundary::Dirichlet(vec![0.0; n_w])
    }

    fn manufactured(n_xi: usize, n_w: usize) -> f64 {
        let grid = CollarGrid::neck(0.5, 0.3, 1.0, n_xi, n_w).unwrap();
        let sigma = |v: f64, w: f64| -bump(v, w);
        let b = zero_dirichlet(n_w);
        let p = LiouvilleProblem { grid, sigma: Some(&sigma), lower: &b, upper: &b };
        let f = solve_liouville(&p, &NewtonSettings::default()).unwrap();
        assert!(sandwich(&p, &f).holds(1e-8));
        let exact = ConformalFactor::from_fn(grid, bump);
        f.phi.iter().zip(&exact.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn hyperbolic_collar_gives_zero() {
        let grid = CollarGrid::neck(0.3, 0.5, 1.0, 41, 8).unwrap();
        let b = zero_dirichlet(8);
        let p = LiouvilleProblem { grid, sigma: None, lower: &b, upper: &b };
        let f = solve_liouville(&p, &NewtonSettings::default()).unwrap();
        assert!(f.phi.iter().all(|x| x.abs() < 1e-12));
        assert_eq!(f.iterations, 0);
    }

    #[test]
    fn manufactured_solution_converges_at_fourth_order() {
        let e: Vec<f64> = [17, 33, 65, 129].iter().map(|n| manufactured(*n, 8)).collect();
        assert!(e.windows(2).all(|p| p[0] / p[1] > 8.0), "{e:?}");
        assert!(e[3] < 1e-6, "{e:?}");
    }

    #[test]
    fn conformal_covariance() {
        let grid = CollarGrid::neck(0.4, -0.2, 1.0, 129, 16).unwrap();
        let data: Vec<f64> = (0..16).map(|j| 0.2 + 0.05 * (4.0 * PI * grid.w(j)).cos()).collect();
        let b = Boundary::Dirichlet(data.clone());
        let p = LiouvilleProblem { grid, sigma: None, lower: &b, upper: &b };
        let base = solve_liouville(&p, &NewtonSettings::default()).unwrap();
        // σ vanishes at the ends, so the Dirichlet data carry over.
        let sigma = |v: f64, w: f64| 0.5 * bump(v, w + 0.1);
        let q = LiouvilleProblem { grid, sigma: Some(&sigma), ..p };
        let shifted = solve_liouville(&q, &NewtonSettings::default()).unwrap();
        let s = ConformalFactor::from_fn(grid, sigma);
        let worst = (0..grid.len()).map(|k| (shifted.phi[k] + s.phi[k] - base.phi[k]).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
        assert!(sandwich(&q, &shifted).holds(1e-8));
    }

    #[test]
    fn cusp_limit_satisfies_the_profile_law() {
        let s = CollarSettings { h_xi: 0.04, n_w: 16, ..CollarSettings::default() };
        let data = |_: f64| 0.25;
        let lim = solve_cusp_limit(0.3, &data, &s).unwrap();
        // w-independent data: the exact solution is -log(1 + a|v|).
        let a = lim.cusp_constant(true, 0);
        let a_exact = (-0.25f64).exp() - 1.0;
        assert!((a - a_exact).abs() < 1e-6, "{a} {a_exact}");
        for i in [0, 20, 60] {
            let v = lim.pos.grid.v_of(lim.pos.grid.xi(i));
            assert!((lim.pos.at(i, 3) + (a_exact * v).ln_1p()).abs() < 1e-6);
        }
    }

    #[test]
    fn energy_matches_direct_quadrature() {
        let grid = CollarGrid::neck(0.5, 0.4, 1.0, 321, 32).unwrap();
        let f = ConformalFactor::from_fn(grid, bump);
        let got = collar_energy(&f, -0.5, 0.7).unwrap();
        let (ell, nu) = (0.5, 0.4);
        let k = 1.0 + nu * nu;
        let gl = GaussLegendre::new(40);
        let h = 1e-4;
        let want: f64 = (0..64)
            .map(|j| {
                let w = j as f64 * W_PERIOD / 64.0;
                gl.integrate(-0.5, 0.7, |v| {
                    let pv = crate::numerics::diff::d1(|x| bump(x, w), v, h);
                    let pw = crate::numerics::diff::d1(|y| bump(v, y), w, h);
                    let s = v * v + ell * ell;
                    s * pv * pv - 2.0 * nu / k * pv * pw + pw * pw / (k * s)
                }) * W_PERIOD
                    / 64.0
            })
            .sum();
        assert!((got - want).abs() < 1e-8, "{got} {want}");
        let zero = ConformalFactor::from_fn(grid, |_, _| 0.7);
        assert!(collar_energy(&zero, -0.5, 0.5).unwrap().abs() < 1e-20);
        assert!(collar_energy(&zero, -2.0, 0.5).is_err());
    }

    #[test]
    fn chart_curvatures() {
        let sphere = |p: &[f64; 2]| Matrix2::new(1.0, 0.0, 0.0, p[0].sin().powi(2));
        assert!((chart_curvature(sphere, [1.0, 0.3], 1.0) - 1.0).abs() < 1e-8);
        let flat = |_: &[f64; 2]| Matrix2::new(2.0, 0.3, 0.3, 1.0);
        assert!(chart_curvature(flat, [0.0, 0.0], 1.0).abs() < 1e-8);
        for kind in [CollarGrid::neck(0.01, 0.7, 1.0, 11, 8).unwrap(), CollarGrid::half(-1.0, 0.7, 0.01, 1.0, 11, 8).unwrap()] {
            let m = |p: &[f64; 2]| kind.model_metric(p[0]);
            assert!((chart_curvature(m, [-0.5, 0.1], 1.0) + 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn degeneration_converges() {
        let s = CollarSettings { h_xi: 0.04, n_w: 16, ..CollarSettings::default() };
        let data = |w: f64| 0.25 + 0.1 * (4.0 * PI * w).cos();
        let ells = [0.1, 0.025, 0.00625];
        let (_, recs) = degeneration_convergence(&ells, 0.5, &data, &s).unwrap();
        for w in recs.windows(2) {
            assert!(w[1].sup_distance < w[0].sup_distance, "{recs:?}");
            assert!(w[1].energy < w[0].energy);
        }
        assert!(recs[2].sup_distance < 5e-3, "{recs:?}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(CollarGrid::neck(0.1, 0.0, 1.0, 2, 8).is_err());
        assert!(CollarGrid::neck(0.0, 0.0, 1.0, 20, 8).is_err());
        let grid = CollarGrid::neck(0.3, 0.0, 1.0, 21, 8).unwrap();
        let b = Boundary::Dirichlet(vec![0.0; 8]);
        let p = LiouvilleProblem { grid, sigma: None, lower: &Boundary::CuspRobin, upper: &b };
        assert!(solve_liouville(&p, &NewtonSettings::default()).is_err());
    }

    #[test]
    fn sampling_interpolates_values_and_gradients() {
        let f = |v: f64, w: f64| 0.2 * (1.5 * v).sin() + 0.1 * v * (4.0 * PI * w).cos() + 0.05 * (8.0 * PI * w).sin();
        let grid = CollarGrid::neck(0.05, 0.3, 1.0, 241, 16).unwrap();
        let phi = ConformalFactor::from_fn(grid, f);
        for (v, w) in [(0.013, 0.07), (-0.4, 0.31), (0.77, 0.449), (0.0, 0.2)] {
            let (x, xv, xw) = phi.sample(v, w).unwrap();
            let ev = 0.3 * (1.5 * v).cos() + 0.1 * (4.0 * PI * w).cos();
            let ew = -0.4 * PI * v * (4.0 * PI * w).sin() + 0.4 * PI * (8.0 * PI * w).cos();
            assert!((x - f(v, w)).abs() < 1e-9, "{v} {w}");
            assert!((xv - ev).abs() < 1e-6, "{v} {w} {xv} {ev}");
            assert!((xw - ew).abs() < 1e-9, "{v} {w}");
        }
        assert!(phi.sample(1.5, 0.0).is_none());
    }
}
