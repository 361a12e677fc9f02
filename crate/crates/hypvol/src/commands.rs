// SPDX-License-Identifier: MIT OR Apache-2.0

//! Subcommand implementations.
//!
//! Each function reads its spec section, applies the flag overrides, runs
//! the computation on the calling thread and writes its files. It returns
//! whether the subcommand's numerical check passed; errors carry their own
//! exit code.

use std::path::Path;

use hypvol_core::cusp_model::CuspParams;
use hypvol_core::degeneration::{run_sweep, CyclicFamily, EpsRecord, SweepSettings, TrigData};
use hypvol_core::hamilton_jacobi::{a2_closed_form, chebyshev_levels, expansion_coeffs, hj_cusp_solve, BoundaryData, CompliantData, InversionOptions, DEFAULT_FIT_TOP};
use hypvol_core::moebius::{Circle, MoebiusMap};
use hypvol_core::renvol::collar::{variation_direct, variation_formula, CollarBump, CollarQuadrature, VariationSettings};
use hypvol_core::renvol::finite_part::{finite_part_fit_with, funnel_volume, slab_volume, FinitePartResult, FUNNEL_FINITE_PART, MIN_SAMPLES};
use hypvol_core::schottky::validate_group;
use hypvol_core::uniformize::{solve_cusp_limit, solve_neck, CollarSettings, ConformalFactor};
use hypvol_core::{Error, C64};
use serde::Serialize;
use serde_json::json;

use crate::checks::{self, CriterionReport};
use crate::config::{GridSpec, Overrides, RunConfig, SpecFile, VolrModel, MIN_GRID};
use crate::error::{CliError, Result};
use crate::output::{col, csv_bytes, json_bytes, Cell, Column, Header, OutDir};

/// Default tolerance of the `volr` oracle comparison.
pub const VOLR_TOL: f64 = 1e-6;
/// Default tolerance of `variation` (relative).
pub const VARIATION_TOL: f64 = checks::TOL_VARIATION;
/// Default tolerance of `sweep` (final gap relative to `|Vol_R(0)|`).
pub const SWEEP_TOL: f64 = checks::TOL_FINAL_GAP;
/// Default tolerance of `hj-solve` (eikonal residual).
pub const HJ_TOL: f64 = checks::TOL_HJ_RESIDUAL;
/// Quadrature of the closed-form variation.
pub const VARIATION_QUADRATURE: CollarQuadrature = CollarQuadrature { v_panels: 8, v_nodes: 24, w_nodes: 8 };

/// Where and how a subcommand runs.
#[derive(Debug, Clone, Copy)]
pub struct Ctx<'a> {
    /// Spec file.
    pub spec: Option<&'a Path>,
    /// Flags.
    pub overrides: &'a Overrides,
    /// Output directory.
    pub out: &'a Path,
}

impl Ctx<'_> {
    fn load(&self) -> Result<SpecFile> {
        let path = self.spec.ok_or_else(|| CliError::usage("a spec file is required"))?;
        SpecFile::load(path)
    }

    fn header<T: Serialize>(&self, command: &str, section: &T) -> Header {
        Header::new(command, RunConfig { command, section, overrides: self.overrides }.sha256())
    }
}

/// Library errors caused by the configuration become usage errors; the
/// rest are numerical failures.
fn classify(e: Error) -> CliError {
    match e {
        Error::InvalidInput(_) | Error::OutOfDomain(_) => CliError::usage(format!("invalid configuration: {e}")),
        other => CliError::Numerical(other),
    }
}

fn c64(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

/// `group-validate`: check that the circles of a Schottky group are
/// disjoint and paired by the generators.
pub fn group_validate(ctx: &Ctx<'_>) -> Result<bool> {
    let spec = ctx.load()?;
    let g = SpecFile::section(&spec.group, "group")?;
    if g.generators.is_empty() {
        return Err(CliError::usage("[group] needs at least one generator"));
    }
    let mut maps = Vec::new();
    let mut circles = Vec::new();
    for (k, e) in g.generators.iter().enumerate() {
        let map = match (e.matrix, e.p_minus, e.p_plus, e.ell) {
            (Some(m), None, None, None) => MoebiusMap::new(c64(m[0]), c64(m[1]), c64(m[2]), c64(m[3])),
            (None, Some(pm), Some(pp), Some(ell)) => {
                let nu = e.nu.unwrap_or(0.0);
                MoebiusMap::from_fixed_points(c64(pm), c64(pp), C64::new(ell, ell * nu).exp())
            }
            _ => return Err(CliError::usage(format!("generator {k}: give either `matrix` or `p_minus`, `p_plus` and `ell`"))),
        }
        .map_err(classify)?;
        let (a, b) = match e.circles {
            Some([a, b]) => (
                Circle::new(C64::new(a[0], a[1]), a[2]).map_err(classify)?,
                Circle::new(C64::new(b[0], b[1]), b[2]).map_err(classify)?,
            ),
            None => map.canonical_circles().map_err(classify)?,
        };
        maps.push(map);
        circles.push(a);
        circles.push(b);
    }
    let header = ctx.header("group-validate", g);
    let group = validate_group(maps, circles)?;
    println!(
        "group-validate: adapted, genus {}, min gap {:.6e}, max pairing error {:.3e}",
        group.genus(),
        group.min_gap(),
        group.max_pairing_error()
    );
    let gaps: Vec<_> = group
        .gaps()
        .into_iter()
        .map(|(i, j, gap)| {
            println!("  gap C{i}-C{j} = {gap:.6e}");
            json!({ "first": i, "second": j, "gap": gap })
        })
        .collect();
    let circles: Vec<_> = group.circles().iter().map(|c| json!([c.center.re, c.center.im, c.radius])).collect();
    let summary = json!({
        "genus": group.genus(),
        "adapted": true,
        "min_gap": group.min_gap(),
        "max_pairing_error": group.max_pairing_error(),
        "gaps": gaps,
        "circles": circles,
    });
    OutDir::create(ctx.out)?.write("group.json", &json_bytes(&header, summary))?;
    Ok(true)
}

fn fit_value(fit: &FinitePartResult, eps: f64) -> f64 {
    let extra: f64 = fit.extra.iter().map(|(p, c)| c * eps.powi(*p)).sum();
    fit.a2 / (eps * eps) + fit.a1 * eps.ln() + fit.a0 + fit.a_minus1 * eps + extra
}

fn fit_json(fit: &FinitePartResult) -> serde_json::Value {
    json!({
        "a2": fit.a2,
        "a1": fit.a1,
        "a0": fit.a0,
        "a_minus1": fit.a_minus1,
        "extra": fit.extra,
        "uncertainty": fit.uncertainty,
        "half_grid_shift": fit.half_grid_shift,
        "residual_max": fit.residual_max,
        "condition": fit.condition,
    })
}

/// `volr`: finite-part fit of `V(ε)` samples.
pub fn volr(ctx: &Ctx<'_>) -> Result<bool> {
    let spec = ctx.load()?;
    let mut s = SpecFile::section(&spec.volr, "volr")?.clone();
    ctx.overrides.apply_grid(&mut s.grid);
    let min_len = MIN_SAMPLES.max(MIN_GRID);
    let (samples, oracle) = match s.model {
        VolrModel::Slab | VolrModel::Funnel => {
            let (f, a0): (fn(f64) -> f64, f64) = match s.model {
                VolrModel::Slab => (slab_volume, -0.5),
                _ => (funnel_volume, FUNNEL_FINITE_PART),
            };
            let grid = s.grid.resolve(min_len)?;
            (grid.iter().map(|e| (*e, f(*e))).collect::<Vec<_>>(), Some(a0))
        }
        VolrModel::Table => {
            let mut t: Vec<(f64, f64)> = s
                .samples
                .as_ref()
                .ok_or_else(|| CliError::usage("model = \"table\" needs `samples`"))?
                .iter()
                .map(|p| (p[0], p[1]))
                .collect();
            if t.len() < min_len {
                return Err(CliError::usage(format!("table has {} samples; at least {min_len} are needed", t.len())));
            }
            t.sort_by(|a, b| b.0.total_cmp(&a.0));
            (t, None)
        }
    };
    let header = ctx.header("volr", &s);
    let fit = finite_part_fit_with(&samples, &s.extra_powers).map_err(classify)?;
    let tol = ctx.overrides.tol.unwrap_or(VOLR_TOL);
    let (check, passed) = match oracle {
        Some(a0) => {
            let err = (fit.a0 - a0).abs();
            (json!({ "oracle_a0": a0, "error": err, "tol": tol }), err < tol)
        }
        None => match ctx.overrides.tol {
            Some(t) => (json!({ "error_estimate": fit.error_estimate(), "tol": t }), fit.error_estimate() < t),
            None => (json!(null), true),
        },
    };
    let cols = [
        col("eps", "regularization parameter"),
        col("volume", "volume of the region above the level eps"),
        col("fit", "fitted expansion at eps"),
    ];
    let rows: Vec<Vec<Cell>> = samples.iter().map(|(e, v)| vec![Cell::F(*e), Cell::F(*v), Cell::F(fit_value(&fit, *e))]).collect();
    let out = OutDir::create(ctx.out)?;
    out.write("volr.csv", &csv_bytes(&header, &cols, &rows)?)?;
    out.write("volr.json", &json_bytes(&header, json!({ "fit": fit_json(&fit), "check": check, "passed": passed })))?;
    println!(
        "volr: a0 = {:.12e} (a2 = {:.6e}, a1 = {:.6e}, estimated error {:.1e}){}",
        fit.a0,
        fit.a2,
        fit.a1,
        fit.error_estimate(),
        oracle.map_or(String::new(), |o| format!(", oracle {o}: {}", if passed { "PASS" } else { "FAIL" }))
    );
    Ok(passed)
}

/// `variation`: direct finite-part variation against the closed form.
pub fn variation(ctx: &Ctx<'_>) -> Result<bool> {
    let spec = ctx.load()?;
    let mut s = SpecFile::section(&spec.variation, "variation")?.clone();
    let mut grid = s.grid.clone().unwrap_or(GridSpec { values: Some(VariationSettings::default().eps), ..GridSpec::default() });
    ctx.overrides.apply_grid(&mut grid);
    let eps = grid.resolve(MIN_SAMPLES.max(MIN_GRID))?;
    s.grid = Some(grid);
    if !(s.psi.radius > 0.0) {
        return Err(CliError::usage("psi.radius must be positive"));
    }
    let header = ctx.header("variation", &s);
    let params = CuspParams::new(s.ell, s.nu, 1.0).map_err(classify)?;
    let psi: CollarBump = s.psi.into();
    let phi0 = s.phi0.unwrap_or(0.5 * (1.0 + s.nu * s.nu).ln());
    let settings = VariationSettings { eps, ..VariationSettings::default() };
    let direct = variation_direct(&params, phi0, psi, psi.support(), &settings).map_err(classify)?;
    let formula = variation_formula(s.ell, s.nu, &psi, psi.support(), &VARIATION_QUADRATURE);
    let rel = (direct.fit.a0 - formula).abs() / formula.abs();
    let tol = ctx.overrides.tol.unwrap_or(VARIATION_TOL);
    let passed = rel < tol;
    let cols = [col("eps", "regularization parameter"), col("delta_volume", "volume difference V_psi(eps) - V_0(eps) over the collar")];
    let rows: Vec<Vec<Cell>> = direct.samples.iter().map(|(e, v)| vec![Cell::F(*e), Cell::F(*v)]).collect();
    let out = OutDir::create(ctx.out)?;
    out.write("variation.csv", &csv_bytes(&header, &cols, &rows)?)?;
    let summary = json!({
        "direct": direct.fit.a0,
        "formula": formula,
        "relative_difference": rel,
        "tol": tol,
        "passed": passed,
        "fit": fit_json(&direct.fit),
    });
    out.write("variation.json", &json_bytes(&header, summary))?;
    println!(
        "variation: direct {:.10e}, formula {:.10e}, relative difference {rel:.3e} ({})",
        direct.fit.a0,
        formula,
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(passed)
}

/// Largest increase tolerated between consecutive gaps of the sweep check,
/// relative to `|Vol_R(0)|`. A frozen family has gaps at rounding level,
/// whose order is noise.
pub const GAP_SLACK: f64 = 1e-12;

fn record_cells(eps: f64, r: &std::result::Result<EpsRecord, Error>, limit: Option<f64>) -> Vec<Cell> {
    match r {
        Ok(r) => {
            let p = &r.regions;
            vec![
                Cell::F(eps),
                Cell::F(r.ell),
                Cell::F(r.nu),
                Cell::F(r.vol_r),
                Cell::F(limit.map_or(f64::NAN, |l| (r.vol_r - l).abs())),
                Cell::F(r.far),
                Cell::F(r.near_direct),
                Cell::F(p.r1),
                Cell::F(p.r2()),
                Cell::F(p.r3()),
                Cell::F(p.a1),
                Cell::F(p.a2),
                Cell::F(p.a3),
                Cell::F(p.i1),
                Cell::F(p.i2),
                Cell::F(p.i3),
                Cell::F(r.region_residual),
                Cell::F(r.additivity_residual),
                Cell::F(r.fit_error),
                Cell::from(r.newton_iterations),
                Cell::from("ok"),
            ]
        }
        Err(e) => {
            let mut cells = vec![Cell::F(eps)];
            cells.extend(std::iter::repeat_n(Cell::F(f64::NAN), 18));
            cells.push(Cell::I(0));
            cells.push(Cell::S(format!("failed: {e}")));
            cells
        }
    }
}

const SWEEP_COLUMNS: [Column; 21] = [
    col("eps", "degeneration parameter (0 for the limit)"),
    col("ell", "translation length of the pinching geodesic"),
    col("nu", "twist ratio"),
    col("vol_r", "renormalized volume of the cusp-local window, direct finite part"),
    col("gap", "|vol_r - vol_r(0)|"),
    col("far", "finite part with the far cutoff"),
    col("near", "finite part with the near cutoff"),
    col("r1", "near piece: region R1"),
    col("r2", "near piece: region R2 (A2 + I2)"),
    col("r3", "near piece: region R3 (A3 + I3)"),
    col("a1", "corner piece A1"),
    col("a2", "corner piece A2"),
    col("a3", "corner piece A3"),
    col("i1", "interior piece I1"),
    col("i2", "interior piece I2"),
    col("i3", "interior piece I3"),
    col("region_residual", "|sum of regions - near| / |near|"),
    col("additivity_residual", "|far + near - vol_r| / |vol_r|"),
    col("fit_error", "largest finite-part error estimate"),
    col("newton_iterations", "uniformization Newton iterations"),
    col("status", "ok or the failure message"),
];

/// `sweep`: renormalized volume along a degenerating family.
pub fn sweep(ctx: &Ctx<'_>) -> Result<bool> {
    let spec = ctx.load()?;
    let mut f = SpecFile::section(&spec.family, "family")?.clone();
    ctx.overrides.apply_grid(&mut f.grid);
    if let Some(d) = ctx.overrides.delta {
        f.delta = d;
    }
    let grid = f.grid.resolve(MIN_GRID)?;
    let settings = SweepSettings { collar: f.collar.apply(SweepSettings::default().collar)?, ..SweepSettings::default() };
    let fam = CyclicFamily::new(f.ell.to_profile()?, f.nu.to_profile()?, TrigData::from(&f.data), grid, f.delta).map_err(classify)?;
    let header = ctx.header("sweep", &f);
    let run = run_sweep(&fam, &settings);

    let limit = run.limit.as_ref().ok().map(|r| r.vol_r);
    let mut rows: Vec<Vec<Cell>> = fam.grid().iter().zip(&run.records).map(|(e, r)| record_cells(*e, r, limit)).collect();
    rows.push(record_cells(0.0, &run.limit, limit));
    let failures: Vec<(f64, String)> = fam
        .grid()
        .iter()
        .zip(&run.records)
        .chain(std::iter::once((&0.0, &run.limit)))
        .filter_map(|(e, r)| r.as_ref().err().map(|err| (*e, err.to_string())))
        .collect();

    let gaps = run.gaps();
    let tol = ctx.overrides.tol.unwrap_or(SWEEP_TOL);
    let (passed, final_rel, monotone) = match limit {
        Some(l) => {
            let slack = GAP_SLACK * l.abs();
            let tail = &gaps[gaps.len().saturating_sub(3)..];
            let monotone = tail.len() == 3 && tail.windows(2).all(|p| matches!((p[0], p[1]), (Some(a), Some(b)) if b <= a + slack));
            let final_rel = run.final_gap().map(|g| g / l.abs());
            (monotone && final_rel.is_some_and(|r| r < tol), final_rel, monotone)
        }
        None => (false, None, false),
    };

    let out = OutDir::create(ctx.out)?;
    out.write("sweep.csv", &csv_bytes(&header, &SWEEP_COLUMNS, &rows)?)?;
    let plot_cols = [col("eps", "degeneration parameter"), col("vol_r", "renormalized volume"), col("gap", "|vol_r - vol_r(0)|")];
    let plot: Vec<Vec<Cell>> = fam
        .grid()
        .iter()
        .zip(&run.records)
        .zip(&gaps)
        .map(|((e, r), g)| {
            vec![Cell::F(*e), Cell::F(r.as_ref().map_or(f64::NAN, |r| r.vol_r)), Cell::F(g.unwrap_or(f64::NAN))]
        })
        .collect();
    out.write("sweep_plot.csv", &csv_bytes(&header, &plot_cols, &plot)?)?;
    let summary = json!({
        "vol_r_limit": limit,
        "grid": fam.grid(),
        "gaps": gaps,
        "final_gap": run.final_gap(),
        "final_gap_relative": final_rel,
        "last_three_gaps_non_increasing": monotone,
        "max_region_residual": run.max_region_residual(),
        "failures": failures.iter().map(|(e, m)| json!({ "eps": e, "error": m })).collect::<Vec<_>>(),
        "tol": tol,
        "passed": passed,
    });
    out.write("sweep.json", &json_bytes(&header, summary))?;

    for (e, m) in &failures {
        eprintln!("sweep: eps = {e:e} failed: {m}");
    }
    println!(
        "sweep: {} points, Vol_R(0) = {}, final gap = {} (relative {}), last 3 gaps non-increasing: {}, limit check {}",
        fam.grid().len(),
        limit.map_or("n/a".into(), |l| format!("{l:.10}")),
        run.final_gap().map_or("n/a".into(), |g| format!("{g:.3e}")),
        final_rel.map_or("n/a".into(), |r| format!("{r:.3e}")),
        if monotone { "yes" } else { "no" },
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(passed)
}

/// `uniformize`: hyperbolic conformal factor on a collar (or the cusped
/// limit when `ell = 0`).
pub fn uniformize(ctx: &Ctx<'_>) -> Result<bool> {
    let spec = ctx.load()?;
    let mut u = SpecFile::section(&spec.uniformize, "uniformize")?.clone();
    if let Some(g) = &ctx.overrides.grid {
        u.sample_v = Some(g.clone());
    }
    if !(u.ell >= 0.0 && u.ell.is_finite()) {
        return Err(CliError::usage("ell must be finite and non-negative"));
    }
    let s: CollarSettings = u.collar.apply(CollarSettings::default())?;
    let header = ctx.header("uniformize", &u);
    let data = TrigData::from(&u.data);
    let bc = |w: f64| data.eval(w);
    let charts: Vec<(&str, ConformalFactor)> = if u.ell > 0.0 {
        vec![("neck", solve_neck(u.ell, u.nu, &bc, &s).map_err(classify)?)]
    } else {
        let lim = solve_cusp_limit(u.nu, &bc, &s).map_err(classify)?;
        vec![("cusp+", lim.pos), ("cusp-", lim.neg)]
    };
    let residual = charts.iter().map(|(_, f)| f.residual).fold(0.0, f64::max);
    let iterations: usize = charts.iter().map(|(_, f)| f.iterations).sum();
    let tol = ctx.overrides.tol.unwrap_or(s.newton.tol);
    let passed = residual <= tol;

    let mut rows = Vec::new();
    match &u.sample_v {
        Some(vs) => {
            for &v in vs {
                let chart = charts.iter().find(|(_, f)| f.grid.xi_of(v).is_some());
                let Some((name, f)) = chart else {
                    return Err(CliError::usage(format!("sample v = {v} lies outside the collar")));
                };
                for j in 0..f.grid.n_w {
                    let w = f.grid.w(j);
                    let phi = f.sample(v, w).map_or(f64::NAN, |x| x.0);
                    rows.push(vec![Cell::from(*name), Cell::F(v), Cell::F(w), Cell::F(phi)]);
                }
            }
        }
        None => {
            for (name, f) in &charts {
                for (v, w, phi) in f.rows() {
                    rows.push(vec![Cell::from(*name), Cell::F(v), Cell::F(w), Cell::F(phi)]);
                }
            }
        }
    }
    let cols = [
        col("chart", "neck, cusp+ or cusp-"),
        col("v", "collar coordinate"),
        col("w", "angular coordinate"),
        col("phi", "log conformal factor relative to the model metric"),
    ];
    let out = OutDir::create(ctx.out)?;
    out.write("uniformize.csv", &csv_bytes(&header, &cols, &rows)?)?;
    let summary = json!({
        "charts": charts.iter().map(|(n, f)| json!({
            "chart": n,
            "nodes": f.phi.len(),
            "iterations": f.iterations,
            "residual": f.residual,
            "min": f.min(),
            "max": f.max(),
        })).collect::<Vec<_>>(),
        "tol": tol,
        "passed": passed,
    });
    out.write("uniformize.json", &json_bytes(&header, summary))?;
    println!(
        "uniformize: {} chart(s), {iterations} Newton iterations, residual {residual:.3e} ({})",
        charts.len(),
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(passed)
}

/// `hj-solve`: geodesic defining function on the cusp model and its
/// expansion coefficients.
pub fn hj_solve(ctx: &Ctx<'_>) -> Result<bool> {
    let spec = ctx.load()?;
    let mut h = SpecFile::section(&spec.hj, "hj")?.clone();
    if let Some(g) = &ctx.overrides.grid {
        h.v = g.clone();
    }
    let degree = h.degree.unwrap_or(8);
    let n_levels = h.levels.unwrap_or(14);
    let top = h.top.unwrap_or(DEFAULT_FIT_TOP);
    if h.v.is_empty() || h.w.is_empty() {
        return Err(CliError::usage("[hj] needs at least one v and one w"));
    }
    if n_levels < MIN_GRID.max(degree + 1) || degree < 2 {
        return Err(CliError::usage(format!("need degree >= 2 and at least max({MIN_GRID}, degree + 1) levels")));
    }
    if !(top > 0.0 && top < 1.0) {
        return Err(CliError::usage("top must lie in (0, 1)"));
    }
    let header = ctx.header("hj-solve", &h);
    let params = CuspParams::new(h.ell, h.nu, 1.0).map_err(classify)?;
    let data: CompliantData = h.data.into();
    let levels = chebyshev_levels(top, n_levels);
    let field = hj_cusp_solve(&params, &data, &h.v, &h.w, &levels, &InversionOptions::default()).map_err(classify)?;
    let coeffs = expansion_coeffs(&field, degree);

    let cols = [
        col("v", "collar coordinate"),
        col("w", "angular coordinate"),
        col("level", "boundary defining coordinate U"),
        col("omega", "log ratio of the geodesic and model defining functions"),
        col("residual", "eikonal residual |d rho / rho|^2 - 1"),
        col("valid", "1 if the node was reached"),
    ];
    let rows: Vec<Vec<Cell>> = field
        .nodes
        .iter()
        .map(|n| {
            vec![Cell::F(n.x[1]), Cell::F(n.x[2]), Cell::F(n.x[0]), Cell::F(n.omega), Cell::F(n.residual), Cell::I(n.valid as i64)]
        })
        .collect();
    let tol = ctx.overrides.tol.unwrap_or(HJ_TOL);
    let residual = field.max_residual();
    let invalid = field.invalid_count();
    let (columns, coeff_error) = match &coeffs {
        Ok(cs) => (
            cs.iter()
                .map(|c| {
                    let (phi, pv, pw) = data.eval(c.y1, c.y2);
                    json!({
                        "v": c.y1,
                        "w": c.y2,
                        "a0": c.a0,
                        "a1": c.a1,
                        "a2": c.a2,
                        "phi": phi,
                        "a2_closed_form": a2_closed_form(h.ell, h.nu, c.y1, pv, pw),
                    })
                })
                .collect::<Vec<_>>(),
            None,
        ),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let passed = residual < tol && invalid == 0 && coeff_error.is_none();
    let out = OutDir::create(ctx.out)?;
    out.write("hj.csv", &csv_bytes(&header, &cols, &rows)?)?;
    let summary = json!({
        "max_residual": residual,
        "unreached_nodes": invalid,
        "columns": columns,
        "expansion_error": coeff_error,
        "tol": tol,
        "passed": passed,
    });
    out.write("hj.json", &json_bytes(&header, summary))?;
    println!(
        "hj-solve: {} nodes, {invalid} unreached, max residual {residual:.3e} ({})",
        field.nodes.len(),
        if passed { "PASS" } else { "FAIL" }
    );
    Ok(passed)
}

/// `model-check`: run acceptance criteria.
pub fn model_check(ctx: &Ctx<'_>, criteria: &[u8]) -> Result<bool> {
    let spec = match ctx.spec {
        Some(_) => ctx.load()?,
        None => SpecFile::default(),
    };
    let from_spec = spec.check.clone().unwrap_or_default();
    let ids: Vec<u8> = if !criteria.is_empty() {
        criteria.to_vec()
    } else if !from_spec.criteria.is_empty() {
        from_spec.criteria.clone()
    } else {
        checks::FAST.to_vec()
    };
    if let Some(bad) = ids.iter().find(|i| checks::describe(**i).is_none()) {
        return Err(CliError::usage(format!("unknown criterion {bad}; criteria are 1 to 8")));
    }
    let seed = ctx.overrides.seed.or(from_spec.seed).unwrap_or(checks::DEFAULT_SEED);
    let section = json!({ "criteria": ids, "seed": seed });
    let header = ctx.header("model-check", &section);
    let mut reports: Vec<CriterionReport> = Vec::new();
    for id in &ids {
        let r = checks::run(*id, seed).expect("criterion ids were validated");
        println!("{}", r.line());
        reports.push(r);
    }
    let passed = reports.iter().all(CriterionReport::passed);
    let written: Vec<_> = reports
        .iter()
        .map(|r| {
            let mut r = r.clone();
            let ok = r.passed();
            r.metrics.retain(|m| !m.timing);
            json!({ "report": r, "passed": ok })
        })
        .collect();
    OutDir::create(ctx.out)?.write("model_check.json", &json_bytes(&header, json!({ "criteria": written, "passed": passed })))?;
    println!("model-check: {}/{} criteria passed", reports.iter().filter(|r| r.passed()).count(), reports.len());
    Ok(passed)
}

