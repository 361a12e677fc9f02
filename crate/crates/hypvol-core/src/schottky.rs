// SPDX-License-Identifier: MIT OR Apache-2.0

//! Classical Schottky groups and admissible degenerating families.
//!
//! Circles are stored flat as `[C_-1, C_+1, C_-2, C_+2, ...]`; generator `j`
//! maps `C_-j` onto `C_+j` and the exterior of the `C_-j` disk into the
//! `C_+j` disk. A degenerating generator is given by a limiting parabolic
//! fixed point `p`, the limiting entry `c`, and profiles `ℓ(ε)`, `ν(ε)`; at
//! `ε > 0` its fixed points are `p ± ℓ(1 + iν)/(2c)` and its multiplier is
//! `e^{ℓ(1 + iν)}`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;

use crate::moebius::{canonical_circles_from, Circle, MoebiusMap};
use crate::Error;

/// Disjointness tolerance on `|z_1 - z_2| - r_1 - r_2`.
pub const DISJOINT_TOL: f64 = 1e-10;
/// Tangency tolerance on the same quantity.
pub const TANGENT_TOL: f64 = 1e-8;
/// Tolerance on sampled circle images.
pub const PAIRING_TOL: f64 = 1e-8;
/// Boundary samples per circle in the pairing check.
pub const PAIRING_SAMPLES: usize = 32;

/// A validated classical Schottky group.
#[derive(Debug, Clone, PartialEq)]
pub struct SchottkyGroup {
    generators: Vec<MoebiusMap>,
    circles: Vec<Circle>,
    min_gap: f64,
    max_pairing_error: f64,
}

impl SchottkyGroup {
    /// Generators in order.
    pub fn generators(&self) -> &[MoebiusMap] {
        &self.generators
    }

    /// Circles `[C_-1, C_+1, ...]`.
    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    /// Number of generators.
    pub fn genus(&self) -> usize {
        self.generators.len()
    }

    /// Smallest gap between two disks.
    pub fn min_gap(&self) -> f64 {
        self.min_gap
    }

    /// Largest sampled deviation of `γ_j(C_-j)` from `C_+j`.
    pub fn max_pairing_error(&self) -> f64 {
        self.max_pairing_error
    }

    /// All pairwise gaps `(i, j, gap)` with `i < j`.
    pub fn gaps(&self) -> Vec<(usize, usize, f64)> {
        pairwise_gaps(&self.circles)
    }
}

fn pairwise_gaps(circles: &[Circle]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..circles.len() {
        for j in i + 1..circles.len() {
            out.push((i, j, circles[i].gap(&circles[j])));
        }
    }
    out
}

/// Largest deviation of sampled images of `from` from the circle `to`.
pub fn pairing_error(m: &MoebiusMap, from: &Circle, to: &Circle) -> f64 {
    from.sample(PAIRING_SAMPLES, 0.123)
        .map(|z| ((m.apply(z) - to.center).norm() - to.radius).abs())
        .fold(0.0, f64::max)
}

/// Check every invariant of a Schottky group and build it.
///
/// Rank one is accepted so that cyclic groups (the cusp-local case) use the
/// same code path.
pub fn validate_group(generators: Vec<MoebiusMap>, circles: Vec<Circle>) -> Result<SchottkyGroup, Error> {
    if generators.is_empty() || circles.len() != 2 * generators.len() {
        return Err(Error::InvalidInput("need g >= 1 generators and 2g circles"));
    }
    let gaps = pairwise_gaps(&circles);
    let mut min_gap = f64::INFINITY;
    for &(i, j, gap) in &gaps {
        if !(gap > DISJOINT_TOL) {
            return Err(Error::NotAdapted {
                first: i,
                second: j,
                gap,
            });
        }
        min_gap = min_gap.min(gap);
    }
    let mut max_err: f64 = 0.0;
    for (j, m) in generators.iter().enumerate() {
        let (cm, cp) = (&circles[2 * j], &circles[2 * j + 1]);
        let scale = 1.0 + cp.radius;
        let err = pairing_error(m, cm, cp);
        // The pole must sit inside the C_- disk for the exterior to land in
        // a bounded disk.
        let pole_inside = m.c.norm() > 0.0 && cm.contains(-m.d / m.c);
        if !(err <= PAIRING_TOL * scale) || !pole_inside {
            return Err(Error::PairingViolated {
                generator: j,
                deviation: if pole_inside { err } else { f64::INFINITY },
            });
        }
        let far = cm.center + C64::new(3.0 * cm.radius + 1.0, 0.0);
        if !cp.contains(m.apply(far)) {
            return Err(Error::PairingViolated {
                generator: j,
                deviation: err,
            });
        }
        max_err = max_err.max(err);
    }
    Ok(SchottkyGroup {
        generators,
        circles,
        min_gap: if gaps.is_empty() { f64::INFINITY } else { min_gap },
        max_pairing_error: max_err,
    })
}

/// A scalar function of `ε` given by data.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `c_0 + c_1 ε + c_2 ε^2 + ...`.
    Polynomial(Vec<f64>),
    /// Piecewise-linear interpolation of `(ε, value)` pairs sorted by `ε`.
    Tabulated(Vec<(f64, f64)>),
}

impl Profile {
    /// Value at `eps`.
    pub fn eval(&self, eps: f64) -> f64 {
        match self {
            Profile::Polynomial(c) => c.iter().rev().fold(0.0, |acc, ck| acc * eps + ck),
            Profile::Tabulated(t) => {
                if t.is_empty() {
                    return f64::NAN;
                }
                if eps <= t[0].0 {
                    return t[0].1;
                }
                for w in t.windows(2) {
                    let ((e0, v0), (e1, v1)) = (w[0], w[1]);
                    if eps <= e1 {
                        return v0 + (v1 - v0) * (eps - e0) / (e1 - e0);
                    }
                }
                t[t.len() - 1].1
            }
        }
    }
}

/// A generator that becomes parabolic at `ε = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneratingGenerator {
    /// Limiting parabolic fixed point.
    pub p: C64,
    /// Limiting lower-left entry; `1/(γ_0 z - p) = 1/(z - p) + c`.
    pub c: C64,
    /// Translation length profile, `ℓ(0) = 0`.
    pub ell: Profile,
    /// Twist ratio profile.
    pub nu: Profile,
}

impl DegeneratingGenerator {
    /// `(1 + iν)/c` at the given `ε`.
    fn direction(&self, eps: f64) -> C64 {
        C64::new(1.0, self.nu.eval(eps)) / self.c
    }

    /// Fixed points `(p_-, p_+)` at `ε`.
    pub fn fixed_points(&self, eps: f64) -> (C64, C64) {
        let half = self.direction(eps) * (0.5 * self.ell.eval(eps));
        (self.p - half, self.p + half)
    }

    /// The generator at `ε`; parabolic when `ℓ(ε) = 0`.
    pub fn at(&self, eps: f64) -> Result<MoebiusMap, Error> {
        let ell = self.ell.eval(eps);
        if ell == 0.0 {
            return Ok(MoebiusMap::parabolic(self.p, self.c));
        }
        if !(ell > 0.0) {
            return Err(Error::NotAdmissible { eps });
        }
        let (pm, pp) = self.fixed_points(eps);
        let q = C64::new(ell, ell * self.nu.eval(eps)).exp();
        MoebiusMap::from_fixed_points(pm, pp, q)
    }

    /// Canonical circles at `ε`; at `ℓ = 0` the tangent limiting pair
    /// centered at `p ∓ (1 + iν)/c` with radius `|1 + iν| / |c|`.
    pub fn circles(&self, eps: f64) -> Result<(Circle, Circle), Error> {
        let ell = self.ell.eval(eps);
        if ell == 0.0 {
            let m = self.direction(eps);
            return Ok((Circle::new(self.p - m, m.norm())?, Circle::new(self.p + m, m.norm())?));
        }
        let (pm, pp) = self.fixed_points(eps);
        canonical_circles_from(pm, pp, ell)
    }
}

/// One generator of a family.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// Independent of `ε`. Without explicit circles the canonical circles
    /// are used.
    Fixed {
        /// The map.
        map: MoebiusMap,
        /// Adapted circles `(C_-, C_+)`.
        circles: Option<(Circle, Circle)>,
    },
    /// Degenerates to a parabolic map at `ε = 0`.
    Degenerating(DegeneratingGenerator),
}

/// Schottky data depending on `ε` along a decreasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleFamily {
    generators: Vec<GeneratorSpec>,
    grid: Vec<f64>,
}

impl AdmissibleFamily {
    /// Check the grid and the degenerating profiles and build the family.
    pub fn new(generators: Vec<GeneratorSpec>, grid: Vec<f64>) -> Result<Self, Error> {
        if generators.is_empty() {
            return Err(Error::InvalidInput("family needs at least one generator"));
        }
        if grid.len() < 2 || grid.iter().any(|e| !(*e > 0.0)) || grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidInput("eps grid must be positive and strictly decreasing"));
        }
        for g in &generators {
            if let GeneratorSpec::Degenerating(d) = g {
                if d.ell.eval(0.0).abs() > 0.0 {
                    return Err(Error::InvalidInput("degenerating profiles need ell(0) = 0"));
                }
                if d.c.norm() == 0.0 {
                    return Err(Error::InvalidInput("degenerating generators need c != 0"));
                }
                if let Some(eps) = grid.iter().find(|e| !(d.ell.eval(**e) > 0.0)) {
                    return Err(Error::NotAdmissible { eps: *eps });
                }
            }
        }
        Ok(Self { generators, grid })
    }

    /// Geometric grid `eps0 * 2^{-k}`, `k = 0..n`.
    pub fn geometric_grid(eps0: f64, n: usize) -> Vec<f64> {
        crate::numerics::geometric_sequence(eps0, 0.5, n)
    }

    /// Generator specs.
    pub fn generators(&self) -> &[GeneratorSpec] {
        &self.generators
    }

    /// The `ε` grid.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    /// Indices of degenerating generators.
    pub fn degenerating(&self) -> impl Iterator<Item = usize> + '_ {
        self.generators
            .iter()
            .enumerate()
            .filter(|(_, g)| matches!(g, GeneratorSpec::Degenerating(_)))
            .map(|(j, _)| j)
    }

    /// Generators at `ε`.
    pub fn maps_at(&self, eps: f64) -> Result<Vec<MoebiusMap>, Error> {
        self.generators
            .iter()
            .map(|g| match g {
                GeneratorSpec::Fixed { map, .. } => Ok(*map),
                GeneratorSpec::Degenerating(d) => d.at(eps),
            })
            .collect()
    }

    /// `(λ_j(ε), ν_j(ε))` measured from the generator at `ε`; at `ε = 0`
    /// the limiting value `λ = |1 + iν| / |c|`.
    pub fn family_parameters(&self, j: usize, eps: f64) -> Result<(f64, f64), Error> {
        let d = match self.generators.get(j) {
            Some(GeneratorSpec::Degenerating(d)) => d,
            _ => return Err(Error::InvalidInput("not a degenerating generator index")),
        };
        if eps == 0.0 {
            let nu = d.nu.eval(0.0);
            return Ok(((1.0 + nu * nu).sqrt() / d.c.norm(), nu));
        }
        let m = d.at(eps)?;
        let mult = m.multiplier()?;
        let mut alpha = mult.alpha;
        if alpha > PI {
            alpha -= TAU;
        }
        Ok((m.fixed_point_distance() / mult.ell, alpha / mult.ell))
    }

    /// Circles of the simplified good fundamental domain at `ε >= 0`.
    pub fn good_domain_circles(&self, eps: f64) -> Result<Vec<Circle>, Error> {
        let mut circles = Vec::with_capacity(2 * self.generators.len());
        let mut tangent_pairs = Vec::new();
        for (j, g) in self.generators.iter().enumerate() {
            let (cm, cp) = match g {
                GeneratorSpec::Fixed { circles: Some(c), .. } => *c,
                GeneratorSpec::Fixed { map, circles: None } => map.canonical_circles()?,
                GeneratorSpec::Degenerating(d) => {
                    if eps == 0.0 {
                        tangent_pairs.push((2 * j, d.p));
                    }
                    d.circles(eps)?
                }
            };
            circles.push(cm);
            circles.push(cp);
        }
        for (i, j, gap) in pairwise_gaps(&circles) {
            let tangent = tangent_pairs.iter().find(|(k, _)| *k == i && j == i + 1);
            match tangent {
                Some((_, p)) => {
                    let t = tangency_point(&circles[i], &circles[j]);
                    if gap.abs() > TANGENT_TOL || (t - p).norm() > TANGENT_TOL {
                        return Err(Error::NotAdmissible { eps });
                    }
                }
                None => {
                    if !(gap > DISJOINT_TOL) {
                        return Err(Error::NotAdmissible { eps });
                    }
                }
            }
        }
        Ok(circles)
    }

    /// Validate the group at every grid point.
    pub fn groups(&self) -> Result<Vec<SchottkyGroup>, Error> {
        self.grid
            .iter()
            .map(|&eps| validate_group(self.maps_at(eps)?, self.good_domain_circles(eps)?))
            .collect()
    }

    /// Hausdorff distance between consecutive circle configurations divided
    /// by the grid spacing, for each interval of the grid (including the
    /// last interval down to `ε = 0`).
    pub fn circle_lipschitz(&self) -> Result<Vec<f64>, Error> {
        let mut eps: Vec<f64> = self.grid.clone();
        eps.push(0.0);
        let configs: Vec<Vec<Circle>> = eps
            .iter()
            .map(|&e| self.good_domain_circles(e))
            .collect::<Result<_, _>>()?;
        Ok(configs
            .windows(2)
            .zip(eps.windows(2))
            .map(|(c, e)| {
                let h = c[0]
                    .iter()
                    .zip(&c[1])
                    .map(|(a, b)| (a.center - b.center).norm() + (a.radius - b.radius).abs())
                    .fold(0.0, f64::max);
                h / (e[0] - e[1])
            })
            .collect())
    }
}

/// Point where two (nearly) tangent circles touch, measured along the line
/// of centers.
pub fn tangency_point(a: &Circle, b: &Circle) -> C64 {
    let dir = b.center - a.center;
    a.center + dir * (a.radius / (a.radius + b.radius))
}
