// SPDX-License-Identifier: MIT OR Apache-2.0

//! The numerical acceptance checks, one function per criterion.
//!
//! Every check draws its random samples from a ChaCha generator seeded by
//! the caller, so a report is reproducible bit for bit. Tolerances and time
//! budgets are constants of this module and are never relaxed at run time.

use std::f64::consts::PI;
use std::time::Instant;

use hypvol_core::cusp_model::{g_l, half_space_metric, phi_l_inverse, phi_theta, theta_moebius, BoundaryMetric, CuspParams, ModelMetric};
use hypvol_core::degeneration::{run_sweep, CyclicFamily, SweepSettings, TrigData};
use hypvol_core::geometry::{gaussian_curvature, jacobian, max_abs_diff, pullback, sectional_curvature, CurvatureFd};
use hypvol_core::hamilton_jacobi::{
    a2_closed_form, chebyshev_levels, expansion_coeffs, hj_cusp_solve, BoundaryData, CompliantData, FnData, InversionOptions,
    DEFAULT_FIT_TOP,
};
use hypvol_core::moebius::HalfSpacePoint;
use hypvol_core::numerics::geometric_sequence;
use hypvol_core::renvol::collar::{variation_direct, variation_formula, CollarBump, CollarQuadrature, VariationSettings};
use hypvol_core::renvol::expansion::{boundary_expansion, epstein_h2, EpsteinMetric, DEFAULT_HEIGHTS};
use hypvol_core::renvol::finite_part::{finite_part_fit, funnel_volume, slab_volume, FUNNEL_FINITE_PART};
use hypvol_core::renvol::schwarzian::{cocycle_residual, schwarzian, sj_residual, Jet};
use hypvol_core::schottky::Profile;
use hypvol_core::uniformize::{
    degeneration_convergence, sandwich, solve_liouville, Boundary, CollarGrid, CollarSettings, ConformalFactor, LiouvilleProblem,
    NewtonSettings,
};
use hypvol_core::{Error, C64};
use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Default seed of `model-check` and of the acceptance suite.
pub const DEFAULT_SEED: u64 = 20_240_917;

/// Curvature tolerance.
pub const TOL_CURVATURE: f64 = 1e-6;
/// Isometry tolerance.
pub const TOL_ISOMETRY: f64 = 1e-7;
/// HJ eikonal residual.
pub const TOL_HJ_RESIDUAL: f64 = 1e-7;
/// HJ first-order coefficient.
pub const TOL_HJ_A1: f64 = 1e-6;
/// HJ second-order coefficient against the closed form.
pub const TOL_HJ_A2: f64 = 1e-5;
/// Finite-part fitter.
pub const TOL_FITTER: f64 = 1e-6;
/// Relative agreement of the two variations.
pub const TOL_VARIATION: f64 = 1e-3;
/// Manufactured-solution error at the finest grid.
pub const TOL_MANUFACTURED: f64 = 1e-6;
/// Error reduction per grid halving.
pub const MIN_HALVING_RATIO: f64 = 3.0;
/// Final sup distance and collar energy of the degenerating collars.
pub const TOL_COLLAR: f64 = 1e-3;
/// Final gap, relative to `|Vol_R(0)|`.
pub const TOL_FINAL_GAP: f64 = 1e-2;
/// Region decomposition against the direct finite part, relative.
pub const TOL_REGIONS: f64 = 1e-4;
/// Schwarzian of a Moebius map.
pub const TOL_SCHWARZIAN_MOEBIUS: f64 = 1e-12;
/// Cocycle identity.
pub const TOL_COCYCLE: f64 = 1e-10;
/// Liouville identity for `J` of the strip.
pub const TOL_SJ: f64 = 1e-6;
/// Second coefficient of the envelope metric.
pub const TOL_EPSTEIN: f64 = 1e-5;

/// Criterion ids.
pub const ALL: [u8; 8] = [1, 2, 3, 4, 5, 6, 7, 8];
/// Criteria that finish in seconds.
pub const FAST: [u8; 4] = [1, 2, 4, 8];

/// One measured quantity and its bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    /// Quantity.
    pub name: String,
    /// Measured value.
    pub value: f64,
    /// Bound.
    pub limit: f64,
    /// How the bound applies: `"<"`, `"<="` or `">="`.
    pub relation: &'static str,
    /// Whether the bound holds.
    pub ok: bool,
    /// Wall-clock measurement; left out of written reports, which must be
    /// reproducible byte for byte.
    #[serde(skip)]
    pub timing: bool,
}

impl Metric {
    fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, relation: "<", ok: value < limit, timing: false }
    }

    fn seconds(name: &str, value: f64, budget: f64) -> Self {
        Self { timing: true, ..Self::below(name, value, budget) }
    }

    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, relation: "<=", ok: value <= limit, timing: false }
    }

    fn at_least(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { name: name.into(), value, limit, relation: ">=", ok: value >= limit, timing: false }
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    /// Criterion number.
    pub id: u8,
    /// Short name.
    pub name: &'static str,
    /// Measured quantities; the wall time is the last one.
    pub metrics: Vec<Metric>,
    /// Remarks, such as skipped parts.
    pub notes: Vec<String>,
    /// Seed of the samples.
    pub seed: u64,
}

impl CriterionReport {
    fn new(id: u8, name: &'static str, seed: u64) -> Self {
        Self { id, name, metrics: Vec::new(), notes: Vec::new(), seed }
    }

    /// All bounds hold.
    pub fn passed(&self) -> bool {
        !self.metrics.is_empty() && self.metrics.iter().all(|m| m.ok)
    }

    /// One line: `criterion N (name): PASS|FAIL | metric value rel limit; ...`.
    pub fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let metrics: Vec<String> = self
            .metrics
            .iter()
            .map(|m| format!("{} {:.3e} {} {:.0e}{}", m.name, m.value, m.relation, m.limit, if m.ok { "" } else { " !" }))
            .collect();
        let mut s = format!("criterion {} ({}): {verdict} | {}", self.id, self.name, metrics.join("; "));
        for n in &self.notes {
            s.push_str(" | ");
            s.push_str(n);
        }
        s
    }

    fn fail(&mut self, what: &str, e: Error) {
        self.metrics.push(Metric { name: format!("{what} failed: {e}"), value: f64::NAN, limit: 0.0, relation: "<", ok: false, timing: false });
    }
}

/// Name and wall-time budget in seconds.
pub fn describe(id: u8) -> Option<(&'static str, f64)> {
    Some(match id {
        1 => ("curvature", 10.0),
        2 => ("isometry", 10.0),
        3 => ("hamilton-jacobi", 60.0),
        4 => ("finite-part fitter", 1.0),
        5 => ("variation", 300.0),
        6 => ("uniformization", 300.0),
        7 => ("degeneration", 900.0),
        8 => ("schwarzian", 10.0),
        _ => return None,
    })
}

/// Run criterion `id` with the given seed; `None` for an unknown id.
pub fn run(id: u8, seed: u64) -> Option<CriterionReport> {
    let (name, budget) = describe(id)?;
    let mut report = CriterionReport::new(id, name, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ u64::from(id));
    let start = Instant::now();
    match id {
        1 => curvature(&mut report, &mut rng),
        2 => isometry(&mut report, &mut rng),
        3 => hamilton_jacobi(&mut report, &mut rng, start, budget),
        4 => fitter(&mut report),
        5 => variation(&mut report, &mut rng),
        6 => uniformization(&mut report),
        7 => degeneration(&mut report),
        8 => schwarzian_checks(&mut report, &mut rng),
        _ => unreachable!(),
    }
    // Criterion 3 budgets each instance itself.
    if id != 3 {
        report.metrics.push(Metric::seconds("seconds", start.elapsed().as_secs_f64(), budget));
    }
    Some(report)
}

fn signed(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let x = rng.random_range(lo..hi);
    if rng.random::<bool>() {
        x
    } else {
        -x
    }
}

fn curvature(report: &mut CriterionReport, rng: &mut ChaCha8Rng) {
    let fd = CurvatureFd { step: 1e-3, richardson: true };
    let mut worst_h: f64 = 0.0;
    for k in 0..1000 {
        let ell = if k % 10 == 0 { 0.0 } else { rng.random_range(0.0..1.0) };
        let nu = rng.random_range(-2.0..2.0);
        let v = signed(rng, 0.05, 1.5);
        let w = rng.random_range(0.0..0.5);
        let kappa = gaussian_curvature(&BoundaryMetric::h_l(ell, nu), &[v, w], v.abs().max(ell), fd);
        worst_h = worst_h.max((kappa + 1.0).abs());
    }
    report.metrics.push(Metric::below("max |K(h_L)+1|", worst_h, TOL_CURVATURE));

    let mut worst_g: f64 = 0.0;
    for k in 0..200 {
        let ell = if k % 10 == 0 { 0.0 } else { rng.random_range(0.0..1.0) };
        let p = match CuspParams::new(ell, rng.random_range(-2.0..2.0), 1.0) {
            Ok(p) => p,
            Err(e) => return report.fail("model parameters", e),
        };
        let x = [rng.random_range(0.05..0.8), signed(rng, 0.05, 0.8), rng.random_range(0.0..0.5)];
        let scale = (x[0] * x[0] + x[1] * x[1] + ell * ell).sqrt().min(0.3);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let kappa = sectional_curvature(&ModelMetric(p), &x, i, j, scale, fd);
            worst_g = worst_g.max((kappa + 1.0).abs());
        }
    }
    report.metrics.push(Metric::below("max |sec(g_L)+1|", worst_g, TOL_CURVATURE));
}

fn isometry(report: &mut CriterionReport, rng: &mut ChaCha8Rng) {
    let mut worst: f64 = 0.0;
    // Θ_L needs distinct fixed points, so ℓ stays positive here.
    for _ in 0..10 {
        let ell = rng.random_range(0.05..1.5);
        let res = (|| -> Result<f64, Error> {
            let p = CuspParams::new(ell, rng.random_range(-1.5..1.5), rng.random_range(0.5..2.0))?;
            let back = theta_moebius(&p)?.inverse();
            let mut worst: f64 = 0.0;
            for _ in 0..100 {
                // Sample in the model and pull back, so every point lies in
                // the domain of the chart.
                let m = [rng.random_range(0.05..0.8), signed(rng, 0.02, 0.8), rng.random_range(-0.25..0.25)];
                let a = back.poincare_extension(&phi_l_inverse(&p, &m)?);
                let y = phi_theta(&p, &a)?;
                let chart = |q: &[f64; 3]| {
                    HalfSpacePoint::new(q[0], C64::new(q[1], q[2]))
                        .and_then(|pt| phi_theta(&p, &pt))
                        .unwrap_or([f64::NAN; 3])
                };
                let jac = jacobian(chart, &[a.x, a.z.re, a.z.im], 1e-3 * a.x);
                let pulled = pullback(&jac, &g_l(&p, &y)) * (a.x * a.x);
                let target: Matrix3<f64> = half_space_metric(&[a.x, a.z.re, a.z.im]) * (a.x * a.x);
                worst = worst.max(max_abs_diff(&pulled, &target));
            }
            Ok(worst)
        })();
        match res {
            Ok(w) => worst = worst.max(w),
            Err(e) => return report.fail("chart evaluation", e),
        }
    }
    report.metrics.push(Metric::below("max |x^2 pullback - I|", worst, TOL_ISOMETRY));
}

fn hamilton_jacobi(report: &mut CriterionReport, rng: &mut ChaCha8Rng, start: Instant, budget: f64) {
    let (mut res, mut a1, mut a2) = (0.0f64, 0.0f64, 0.0f64);
    let mut slowest: f64 = 0.0;
    let mut invalid = 0usize;
    let mut last = start;
    for k in 0..4 {
        let ell = if k % 2 == 0 { 0.0 } else { rng.random_range(0.05..0.6) };
        let nu = rng.random_range(-1.0..1.0);
        let data = CompliantData {
            c0: rng.random_range(-0.3..0.3),
            c1: rng.random_range(-0.3..0.3),
            c2: rng.random_range(-0.3..0.3),
            b: rng.random_range(0.0..0.3),
            s: rng.random_range(0.02..0.1),
            theta: rng.random_range(0.0..2.0 * PI),
        };
        let v: Vec<f64> = (0..3).map(|_| signed(rng, 0.15, 0.6)).collect();
        let w: Vec<f64> = (0..2).map(|_| rng.random_range(-0.25..0.25)).collect();
        let out = (|| -> Result<(), Error> {
            let p = CuspParams::new(ell, nu, 1.0)?;
            let levels = chebyshev_levels(DEFAULT_FIT_TOP, 14);
            let field = hj_cusp_solve(&p, &data, &v, &w, &levels, &InversionOptions::default())?;
            invalid += field.invalid_count();
            res = res.max(field.max_residual());
            for c in expansion_coeffs(&field, 8)? {
                let (_, pv, pw) = data.eval(c.y1, c.y2);
                a1 = a1.max(c.a1.abs());
                a2 = a2.max((c.a2 - a2_closed_form(ell, nu, c.y1, pv, pw)).abs());
            }
            Ok(())
        })();
        if let Err(e) = out {
            return report.fail(&format!("instance {k}"), e);
        }
        let now = Instant::now();
        slowest = slowest.max((now - last).as_secs_f64());
        last = now;
    }
    report.metrics.push(Metric::at_most("unreached nodes", invalid as f64, 0.0));
    report.metrics.push(Metric::below("max |residual|", res, TOL_HJ_RESIDUAL));
    report.metrics.push(Metric::below("max |a1|", a1, TOL_HJ_A1));
    report.metrics.push(Metric::below("max |a2 - closed form|", a2, TOL_HJ_A2));
    report.metrics.push(Metric::seconds("seconds per instance", slowest, budget));
}

fn fitter(report: &mut CriterionReport) {
    let run = |f: fn(f64) -> f64, grid: Vec<f64>| {
        let samples: Vec<(f64, f64)> = grid.iter().map(|e| (*e, f(*e))).collect();
        finite_part_fit(&samples)
    };
    match run(slab_volume, geometric_sequence(0.5, 0.5, 10)) {
        Ok(r) => {
            let err = (r.a2 - 0.5).abs().max(r.a1.abs()).max((r.a0 + 0.5).abs());
            report.metrics.push(Metric::below("slab |(a2,a1,a0) - (1/2,0,-1/2)|", err, TOL_FITTER));
        }
        Err(e) => report.fail("slab fit", e),
    }
    match run(funnel_volume, geometric_sequence(2e-3, 0.5, 8)) {
        Ok(r) => report.metrics.push(Metric::below("funnel |a0 + 3/8|", (r.a0 - FUNNEL_FINITE_PART).abs(), TOL_FITTER)),
        Err(e) => report.fail("funnel fit", e),
    }
}

fn variation(report: &mut CriterionReport, rng: &mut ChaCha8Rng) {
    let quad = CollarQuadrature { v_panels: 8, v_nodes: 24, w_nodes: 8 };
    let mut worst: f64 = 0.0;
    for k in 0..5 {
        let ell = rng.random_range(0.2..0.6);
        let nu = rng.random_range(-0.5..0.5);
        let psi = CollarBump {
            amp: rng.random_range(0.05..0.15),
            center: signed(rng, 0.3, 0.5),
            radius: rng.random_range(0.15..0.25),
            b: rng.random_range(0.0..0.6),
            theta: rng.random_range(0.0..2.0 * PI),
        };
        let out = CuspParams::new(ell, nu, 1.0).and_then(|p| {
            let phi0 = 0.5 * (1.0 + nu * nu).ln();
            variation_direct(&p, phi0, psi, psi.support(), &VariationSettings::default())
        });
        match out {
            Ok(direct) => {
                let formula = variation_formula(ell, nu, &psi, psi.support(), &quad);
                worst = worst.max((direct.fit.a0 - formula).abs() / formula.abs());
            }
            Err(e) => return report.fail(&format!("perturbation {k}"), e),
        }
    }
    report.metrics.push(Metric::below("max relative difference", worst, TOL_VARIATION));
}

/// Smooth profile vanishing at `v = ±1`; the manufactured solution.
fn manufactured_bump(v: f64, w: f64) -> f64 {
    let q = 1.0 - v * v;
    if q <= 0.0 {
        return 0.0;
    }
    0.3 * q * q * q * (1.0 + 0.5 * (4.0 * PI * w).cos())
}

/// Collar lengths of the degenerating sequence.
pub const COLLAR_ELLS: [f64; 5] = [0.1, 0.025, 0.00625, 0.0015625, 0.000390625];

fn uniformization(report: &mut CriterionReport) {
    let mut errors = Vec::new();
    for n in [17, 33, 65, 129] {
        let out = CollarGrid::neck(0.5, 0.3, 1.0, n, 8).and_then(|grid| {
            let sigma = |v: f64, w: f64| -manufactured_bump(v, w);
            let b = Boundary::Dirichlet(vec![0.0; 8]);
            let p = LiouvilleProblem { grid, sigma: Some(&sigma), lower: &b, upper: &b };
            let f = solve_liouville(&p, &NewtonSettings::default())?;
            if !sandwich(&p, &f).holds(1e-8) {
                return Err(Error::InvalidInput("sub/super-solution sandwich violated"));
            }
            let exact = ConformalFactor::from_fn(grid, manufactured_bump);
            Ok(f.phi.iter().zip(&exact.phi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        });
        match out {
            Ok(e) => errors.push(e),
            Err(e) => return report.fail(&format!("manufactured grid {n}"), e),
        }
    }
    let ratio = errors.windows(2).map(|p| p[0] / p[1]).fold(f64::INFINITY, f64::min);
    report.metrics.push(Metric::below("manufactured error (129 nodes)", errors[3], TOL_MANUFACTURED));
    report.metrics.push(Metric::at_least("min reduction per halving", ratio, MIN_HALVING_RATIO));

    let s = CollarSettings { h_xi: 0.04, n_w: 16, ..CollarSettings::default() };
    let data = |w: f64| 0.25 + 0.1 * (4.0 * PI * w).cos();
    match degeneration_convergence(&COLLAR_ELLS, 0.5, &data, &s) {
        Ok((_, recs)) => {
            let sup_up = recs.windows(2).filter(|p| p[1].sup_distance >= p[0].sup_distance).count();
            let energy_up = recs.windows(2).filter(|p| p[1].energy >= p[0].energy).count();
            let last = recs.last().expect("non-empty ell list");
            report.metrics.push(Metric::at_most("sup distance increases", sup_up as f64, 0.0));
            report.metrics.push(Metric::below("final sup distance", last.sup_distance, TOL_COLLAR));
            report.metrics.push(Metric::at_most("collar energy increases", energy_up as f64, 0.0));
            report.metrics.push(Metric::below("final collar energy", last.energy, TOL_COLLAR));
        }
        Err(e) => report.fail("degenerating collars", e),
    }
}

/// The cusp-local reference family of the degeneration check:
/// `ℓ = ε`, `ν = 0.3`, data `0.25 + 0.1 cos 4πw`, `δ = 0.2`, and
/// `ε = 0.1 · 2⁻ᵏ` for `k = 0..7`.
pub fn reference_family() -> Result<CyclicFamily, Error> {
    CyclicFamily::new(
        Profile::Polynomial(vec![0.0, 1.0]),
        Profile::Polynomial(vec![0.3]),
        TrigData { mean: 0.25, cos: vec![0.1], sin: vec![] },
        geometric_sequence(0.1, 0.5, 8),
        0.2,
    )
}

fn degeneration(report: &mut CriterionReport) {
    let fam = match reference_family() {
        Ok(f) => f,
        Err(e) => return report.fail("reference family", e),
    };
    let run = run_sweep(&fam, &SweepSettings::default());
    for (eps, r) in fam.grid().iter().zip(&run.records) {
        if let Err(e) = r {
            report.fail(&format!("eps {eps:e}"), e.clone());
        }
    }
    let limit = match &run.limit {
        Ok(l) => l.vol_r,
        Err(e) => return report.fail("limit", e.clone()),
    };
    let gaps: Vec<f64> = run.gaps().into_iter().map(|g| g.unwrap_or(f64::NAN)).collect();
    let tail = &gaps[gaps.len().saturating_sub(3)..];
    let rises = tail.windows(2).filter(|p| !(p[1] <= p[0])).count();
    report.metrics.push(Metric::at_most("increases among the last 3 gaps", rises as f64, 0.0));
    report.metrics.push(Metric::below(
        "final gap / |Vol_R(0)|",
        run.final_gap().unwrap_or(f64::NAN) / limit.abs(),
        TOL_FINAL_GAP,
    ));
    report.metrics.push(Metric::below(
        "max region residual",
        run.max_region_residual().unwrap_or(f64::NAN),
        TOL_REGIONS,
    ));
    report.notes.push(format!("Vol_R(0) = {limit:.10}"));
    report.notes.push("genus-2 family skipped (non-gating)".into());
}

fn moebius_jet(a: C64, b: C64, c: C64, d: C64) -> impl Fn(Jet) -> Jet {
    move |z: Jet| (z * a + b) / (z * c + Jet::constant(d))
}

fn random_c(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    C64::new(rng.random_range(-r..r), rng.random_range(-r..r))
}

fn schwarzian_checks(report: &mut CriterionReport, rng: &mut ChaCha8Rng) {
    // Moebius maps: |S| scaled by the size of the third derivative.
    let mut s_moeb: f64 = 0.0;
    let mut taken = 0;
    while taken < 200 {
        let (a, b, c, d) = (random_c(rng, 2.0), random_c(rng, 2.0), random_c(rng, 2.0), random_c(rng, 2.0));
        let z = random_c(rng, 1.0);
        let det = a * d - b * c;
        let den = (z * c + d).norm();
        if det.norm() < 0.1 || den < 0.2 {
            continue;
        }
        taken += 1;
        let s = schwarzian(moebius_jet(a, b, c, d), z).norm();
        s_moeb = s_moeb.max(s / (1.0 + den.powi(-4)));
    }
    report.metrics.push(Metric::below("max |S(Moebius)| (scaled)", s_moeb, TOL_SCHWARZIAN_MOEBIUS));

    let mut cocycle: f64 = 0.0;
    taken = 0;
    while taken < 200 {
        let z = random_c(rng, 1.0);
        let k = rng.random_range(0.5..2.0);
        let f = |w: Jet| w.exp() + w * w;
        let g = move |w: Jet| w.sin() * C64::new(k, 0.0) + w * w * w;
        if g(Jet::var(z)).0[1].norm() <= 0.1 {
            continue;
        }
        taken += 1;
        let scale = 1.0 + schwarzian(g, z).norm();
        cocycle = cocycle.max(cocycle_residual(f, g, z) / scale);
    }
    report.metrics.push(Metric::below("max cocycle residual (scaled)", cocycle, TOL_COCYCLE));

    // J = real Moebius ∘ exp maps the strip 0 < Im z < π onto the upper
    // half-plane.
    let mut sj: f64 = 0.0;
    for _ in 0..50 {
        let (a, b, c) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let d: f64 = rng.random_range(-2.0..2.0);
        if a * d - b * c < 0.2 {
            continue;
        }
        let j = moebius_jet(C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0), C64::new(d, 0.0));
        let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(0.6..2.5));
        sj = sj.max(sj_residual(|w: Jet| j(w.exp()), z, 1e-3));
    }
    report.metrics.push(Metric::below("max SJ residual", sj, TOL_SJ));

    let mut epstein: f64 = 0.0;
    for k in 0..10 {
        let c: [f64; 7] = std::array::from_fn(|_| rng.random_range(-0.3..0.3));
        let (kx, ky) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let phi = move |x: f64, y: f64| {
            let s = (kx * x + ky * y).sin();
            let co = (kx * x + ky * y).cos();
            (
                c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y + c[6] * s,
                c[1] + 2.0 * c[3] * x + c[4] * y + c[6] * kx * co,
                c[2] + c[4] * x + 2.0 * c[5] * y + c[6] * ky * co,
            )
        };
        let (x, y) = (rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
        match boundary_expansion(&EpsteinMetric::new(FnData(phi)), [x, y], &DEFAULT_HEIGHTS) {
            Ok(e) => epstein = epstein.max((e.h2 - epstein_h2(|a, b| phi(a, b).0, x, y, 1e-3)).amax()),
            Err(e) => return report.fail(&format!("envelope expansion {k}"), e),
        }
    }
    report.metrics.push(Metric::below("max |h2 - Epstein h2|", epstein, TOL_EPSTEIN));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_criteria_are_rejected() {
        assert!(run(0, 1).is_none());
        assert!(run(9, 1).is_none());
    }

    #[test]
    fn fitter_report_passes() {
        let r = run(4, DEFAULT_SEED).unwrap();
        assert!(r.passed(), "{}", r.line());
        assert!(r.line().starts_with("criterion 4 (finite-part fitter): PASS"));
    }

    #[test]
    fn failing_metrics_fail_the_report() {
        let mut r = CriterionReport::new(1, "x", 0);
        r.metrics.push(Metric::below("a", 2.0, 1.0));
        assert!(!r.passed());
        assert!(r.line().contains("FAIL"));
        assert!(!CriterionReport::new(1, "x", 0).passed());
    }
}
