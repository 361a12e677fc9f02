// SPDX-License-Identifier: MIT OR Apache-2.0

//! TOML spec files and command-line overrides.
//!
//! One spec file may carry several sections; each subcommand reads its own
//! (`[group]`, `[volr]`, `[variation]`, `[family]`, `[uniformize]`, `[hj]`,
//! `[check]`). Unknown keys are rejected so that typos surface as parse
//! errors rather than silently ignored settings.

use std::path::{Path, PathBuf};

use hypvol_core::degeneration::TrigData;
use hypvol_core::hamilton_jacobi::CompliantData;
use hypvol_core::renvol::collar::CollarBump;
use hypvol_core::schottky::Profile;
use hypvol_core::uniformize::CollarSettings;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Smallest grid accepted wherever a fit or a convergence check runs.
pub const MIN_GRID: usize = 4;

/// A parsed spec file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    /// Schottky generators for `group-validate`.
    pub group: Option<GroupSpec>,
    /// Volume samples for `volr`.
    pub volr: Option<VolrSpec>,
    /// Collar perturbation for `variation`.
    pub variation: Option<VariationSpec>,
    /// Cusp-local family for `sweep`.
    pub family: Option<FamilySpec>,
    /// Collar problem for `uniformize`.
    pub uniformize: Option<UniformizeSpec>,
    /// Cusp-model HJ problem for `hj-solve`.
    pub hj: Option<HjSpec>,
    /// Criterion selection for `model-check`.
    pub check: Option<CheckSpec>,
}

impl SpecFile {
    /// Read and parse a spec file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|message| CliError::Parse { path: path.to_path_buf(), message })
    }

    /// Parse spec text; the error carries line and column.
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        toml::from_str(text).map_err(|e| {
            let mut msg = e.message().to_string();
            if let Some(span) = e.span() {
                let (line, col) = line_col(text, span.start);
                msg = format!("line {line}, column {col}: {msg}");
            }
            msg
        })
    }

    /// The section for `name`, or a usage error naming it.
    pub fn section<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
        field.as_ref().ok_or_else(|| CliError::usage(format!("spec has no [{name}] section")))
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Flags shared by all subcommands.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Overrides {
    /// `--grid`: explicit sample grid.
    pub grid: Option<Vec<f64>>,
    /// `--tol`: tolerance of the subcommand's numerical check.
    pub tol: Option<f64>,
    /// `--seed`: seed of randomized checks.
    pub seed: Option<u64>,
    /// `--eps-min`: smallest ε of a generated geometric grid.
    pub eps_min: Option<f64>,
    /// `--eps0`: largest ε of a generated geometric grid.
    pub eps0: Option<f64>,
    /// `--delta`: cutoff scale of the sweep.
    pub delta: Option<f64>,
}

impl Overrides {
    /// Reject non-positive tolerances and scales.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("--tol", self.tol), ("--eps-min", self.eps_min), ("--eps0", self.eps0), ("--delta", self.delta)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(CliError::usage(format!("{name} must be positive and finite")));
                }
            }
        }
        Ok(())
    }

    /// Apply `--grid`, `--eps0` and `--eps-min` to a grid spec.
    pub fn apply_grid(&self, g: &mut GridSpec) {
        if let Some(values) = &self.grid {
            *g = GridSpec { values: Some(values.clone()), ..GridSpec::default() };
            return;
        }
        if let Some(e0) = self.eps0 {
            g.values = None;
            g.eps0 = Some(e0);
        }
        if let Some(m) = self.eps_min {
            g.values = None;
            g.eps_min = Some(m);
            g.points = None;
        }
    }
}

/// An ε grid: explicit values or a geometric sequence.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Explicit values; they are sorted into decreasing order.
    pub values: Option<Vec<f64>>,
    /// First element of the geometric sequence.
    pub eps0: Option<f64>,
    /// Number of elements.
    pub points: Option<usize>,
    /// Alternatively, continue the sequence down to this value.
    pub eps_min: Option<f64>,
    /// Ratio of the sequence (default 1/2).
    pub ratio: Option<f64>,
}

impl GridSpec {
    /// A geometric grid.
    pub fn geometric(eps0: f64, points: usize) -> Self {
        Self { eps0: Some(eps0), points: Some(points), ..Self::default() }
    }

    /// The decreasing grid, with at least `min_len` distinct positive values.
    pub fn resolve(&self, min_len: usize) -> Result<Vec<f64>> {
        let grid = match &self.values {
            Some(v) => {
                let mut v = v.clone();
                if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(CliError::usage("grid values must be positive and finite"));
                }
                v.sort_by(|a, b| b.total_cmp(a));
                if v.windows(2).any(|w| w[0] == w[1]) {
                    return Err(CliError::usage("grid values must be distinct"));
                }
                v
            }
            None => {
                let e0 = self.eps0.ok_or_else(|| CliError::usage("grid needs `values` or `eps0`"))?;
                let r = self.ratio.unwrap_or(0.5);
                if !(e0 > 0.0 && r > 0.0 && r < 1.0) {
                    return Err(CliError::usage("grid needs eps0 > 0 and 0 < ratio < 1"));
                }
                let n = match (self.points, self.eps_min) {
                    (Some(n), _) => n,
                    (None, Some(m)) if m > 0.0 && m <= e0 => 1 + ((e0 / m).ln() / (1.0 / r).ln() + 1e-9).floor() as usize,
                    (None, Some(_)) => return Err(CliError::usage("eps_min must lie in (0, eps0]")),
                    (None, None) => return Err(CliError::usage("grid needs `points` or `eps_min`")),
                };
                hypvol_core::numerics::geometric_sequence(e0, r, n)
            }
        };
        if grid.len() < min_len {
            return Err(CliError::usage(format!(
                "grid has {} points; at least {min_len} are needed",
                grid.len()
            )));
        }
        Ok(grid)
    }
}

/// One Schottky generator: by fixed points and complex length, or by an
/// explicit matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    /// Repelling fixed point `[re, im]`.
    pub p_minus: Option<[f64; 2]>,
    /// Attracting fixed point `[re, im]`.
    pub p_plus: Option<[f64; 2]>,
    /// Translation length.
    pub ell: Option<f64>,
    /// Twist ratio (default 0).
    pub nu: Option<f64>,
    /// Matrix entries `[[re, im]; 4]` in the order `a, b, c, d`.
    pub matrix: Option<[[f64; 2]; 4]>,
    /// Circles `[[center_re, center_im, radius]; 2]`; canonical circles
    /// when absent.
    pub circles: Option<[[f64; 3]; 2]>,
}

/// `[group]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    /// Generators, one per handle.
    pub generators: Vec<GeneratorEntry>,
}

/// Volume model for `volr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolrModel {
    /// Product slab `ε ≤ x ≤ 1` over a unit-area torus.
    Slab,
    /// Hyperbolic funnel over a unit-area torus.
    Funnel,
    /// Tabulated `(ε, V)` samples.
    Table,
}

/// `[volr]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolrSpec {
    /// Source of the volumes.
    pub model: VolrModel,
    /// ε grid (closed-form models).
    #[serde(default)]
    pub grid: GridSpec,
    /// `(ε, V)` pairs (tabulated model).
    pub samples: Option<Vec<[f64; 2]>>,
    /// Extra powers of ε in the fit basis.
    #[serde(default)]
    pub extra_powers: Vec<i32>,
}

/// `ψ` for `variation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    /// Peak amplitude.
    pub amp: f64,
    /// Center in `v`.
    pub center: f64,
    /// Half-width in `v`.
    pub radius: f64,
    /// Relative amplitude of the `w` mode.
    #[serde(default)]
    pub b: f64,
    /// Phase of the `w` mode.
    #[serde(default)]
    pub theta: f64,
}

impl From<BumpSpec> for CollarBump {
    fn from(s: BumpSpec) -> Self {
        CollarBump { amp: s.amp, center: s.center, radius: s.radius, b: s.b, theta: s.theta }
    }
}

/// `[variation]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationSpec {
    /// `ℓ`.
    pub ell: f64,
    /// `ν`.
    pub nu: f64,
    /// Constant base data; defaults to `½ log(1+ν²)` (the hyperbolic collar).
    pub phi0: Option<f64>,
    /// The perturbation.
    pub psi: BumpSpec,
    /// ε grid of the direct finite part.
    pub grid: Option<GridSpec>,
}

/// A profile in ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    /// Coefficients in increasing degree.
    Polynomial(Vec<f64>),
    /// `[ε, value]` knots, linearly interpolated.
    Table(Vec<[f64; 2]>),
}

impl ProfileSpec {
    /// Library profile.
    pub fn to_profile(&self) -> Result<Profile> {
        match self {
            ProfileSpec::Polynomial(c) if !c.is_empty() => Ok(Profile::Polynomial(c.clone())),
            ProfileSpec::Polynomial(_) => Err(CliError::usage("polynomial profile needs coefficients")),
            ProfileSpec::Table(t) => {
                if t.len() < 2 || t.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(CliError::usage("profile table needs increasing ε knots"));
                }
                Ok(Profile::Tabulated(t.iter().map(|k| (k[0], k[1])).collect()))
            }
        }
    }
}

/// Boundary values `mean + Σ cos_k cos 4πkw + sin_k sin 4πkw`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSpec {
    /// Mean value.
    #[serde(default)]
    pub mean: f64,
    /// Cosine amplitudes, k = 1, 2, ...
    #[serde(default)]
    pub cos: Vec<f64>,
    /// Sine amplitudes, k = 1, 2, ...
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl From<&TrigSpec> for TrigData {
    fn from(s: &TrigSpec) -> Self {
        TrigData { mean: s.mean, cos: s.cos.clone(), sin: s.sin.clone() }
    }
}

/// Collar discretization overrides.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollarSpec {
    /// Where the Dirichlet data sit.
    pub v_max: Option<f64>,
    /// Truncation of half-collars at the cusp.
    pub v_min: Option<f64>,
    /// Spacing in the collar coordinate.
    pub h_xi: Option<f64>,
    /// Nodes in `w`.
    pub n_w: Option<usize>,
}

impl CollarSpec {
    /// Library settings on top of `base`.
    pub fn apply(&self, base: CollarSettings) -> Result<CollarSettings> {
        let s = CollarSettings {
            v_max: self.v_max.unwrap_or(base.v_max),
            v_min: self.v_min.unwrap_or(base.v_min),
            h_xi: self.h_xi.unwrap_or(base.h_xi),
            n_w: self.n_w.unwrap_or(base.n_w),
            newton: base.newton,
        };
        if !(s.v_min > 0.0 && s.v_min < s.v_max && s.h_xi > 0.0 && s.n_w >= 4) {
            return Err(CliError::usage("collar needs 0 < v_min < v_max, h_xi > 0 and n_w >= 4"));
        }
        Ok(s)
    }
}

/// `[family]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    /// `ℓ(ε)`, with `0 ≤ ℓ(0) < δ`.
    pub ell: ProfileSpec,
    /// `ν(ε)`.
    pub nu: ProfileSpec,
    /// Boundary values at `v = ±v_max`.
    #[serde(default)]
    pub data: TrigSpec,
    /// Cutoff scale `δ`.
    pub delta: f64,
    /// ε grid.
    pub grid: GridSpec,
    /// Collar discretization.
    #[serde(default)]
    pub collar: CollarSpec,
}

/// `[uniformize]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniformizeSpec {
    /// `ℓ`; 0 solves the cusped limit.
    pub ell: f64,
    /// `ν`.
    pub nu: f64,
    /// Boundary values.
    #[serde(default)]
    pub data: TrigSpec,
    /// Discretization.
    #[serde(default)]
    pub collar: CollarSpec,
    /// Output the field at these `v` instead of at the solver nodes.
    pub sample_v: Option<Vec<f64>>,
}

/// Compliant data for `hj-solve`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompliantSpec {
    /// Constant term.
    #[serde(default)]
    pub c0: f64,
    /// Linear term in `v`.
    #[serde(default)]
    pub c1: f64,
    /// Quadratic term in `v`.
    #[serde(default)]
    pub c2: f64,
    /// Amplitude of the `w` mode.
    #[serde(default)]
    pub b: f64,
    /// Flatness scale of the `w` mode.
    #[serde(default = "default_flatness")]
    pub s: f64,
    /// Phase of the `w` mode.
    #[serde(default)]
    pub theta: f64,
}

fn default_flatness() -> f64 {
    0.05
}

impl From<CompliantSpec> for CompliantData {
    fn from(s: CompliantSpec) -> Self {
        CompliantData { c0: s.c0, c1: s.c1, c2: s.c2, b: s.b, s: s.s, theta: s.theta }
    }
}

/// `[hj]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjSpec {
    /// `ℓ`.
    pub ell: f64,
    /// `ν`.
    pub nu: f64,
    /// Boundary data.
    pub data: CompliantSpec,
    /// Column positions in `v`.
    pub v: Vec<f64>,
    /// Column positions in `w`.
    pub w: Vec<f64>,
    /// Top of the level interval (default 0.04).
    pub top: Option<f64>,
    /// Number of Chebyshev levels (default 14).
    pub levels: Option<usize>,
    /// Degree of the expansion fit (default 8).
    pub degree: Option<usize>,
}

/// `[check]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    /// Criteria to run, 1 to 8.
    #[serde(default)]
    pub criteria: Vec<u8>,
    /// Seed of the randomized samples.
    pub seed: Option<u64>,
}

/// The effective configuration of a run, hashed into every output header.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig<'a, T: Serialize> {
    /// Subcommand.
    pub command: &'a str,
    /// The section after overrides.
    pub section: &'a T,
    /// Flags.
    pub overrides: &'a Overrides,
}

impl<T: Serialize> RunConfig<'_, T> {
    /// Hex SHA-256 of the canonical JSON form.
    pub fn sha256(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration is serializable");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Default output directory.
pub fn default_out_dir() -> PathBuf {
    PathBuf::from("hypvol-out")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_errors_carry_positions() {
        let err = SpecFile::parse("[family]\ndelta = \"x\"\n").unwrap_err();
        assert!(err.starts_with("line 2"), "{err}");
        assert!(SpecFile::parse("[nonsense]\n").is_err());
    }

    #[test]
    fn family_section_round_trips() {
        let text = r#"
            [family]
            ell = { polynomial = [0.0, 1.0] }
            nu = { table = [[0.0, 0.3], [1.0, 0.4]] }
            delta = 0.2
            data = { mean = 0.25, cos = [0.1] }
            grid = { eps0 = 0.1, points = 8 }
        "#;
        let s = SpecFile::parse(text).unwrap();
        let f = s.family.unwrap();
        assert_eq!(f.grid.resolve(4).unwrap().len(), 8);
        assert!(matches!(f.nu.to_profile().unwrap(), Profile::Tabulated(_)));
    }

    #[test]
    fn grids_are_checked() {
        let two = GridSpec { values: Some(vec![0.1, 0.05]), ..GridSpec::default() };
        assert!(matches!(two.resolve(MIN_GRID), Err(CliError::Usage(_))));
        let g = GridSpec { eps0: Some(0.1), eps_min: Some(0.0125), ..GridSpec::default() };
        assert_eq!(g.resolve(1).unwrap(), vec![0.1, 0.05, 0.025, 0.0125]);
        let unsorted = GridSpec { values: Some(vec![0.05, 0.1, 0.025, 0.2]), ..GridSpec::default() };
        assert_eq!(unsorted.resolve(4).unwrap(), vec![0.2, 0.1, 0.05, 0.025]);
    }

    #[test]
    fn overrides_replace_the_grid() {
        let mut g = GridSpec::geometric(0.1, 8);
        Overrides { eps_min: Some(0.025), ..Overrides::default() }.apply_grid(&mut g);
        assert_eq!(g.resolve(1).unwrap().len(), 3);
        Overrides { grid: Some(vec![0.3, 0.2]), ..Overrides::default() }.apply_grid(&mut g);
        assert_eq!(g.resolve(1).unwrap(), vec![0.3, 0.2]);
    }

    #[test]
    fn config_hash_tracks_overrides() {
        let spec = GridSpec::geometric(0.1, 8);
        let a = Overrides::default();
        let b = Overrides { tol: Some(1e-3), ..Overrides::default() };
        let h = |o: &Overrides| RunConfig { command: "volr", section: &spec, overrides: o }.sha256();
        assert_eq!(h(&a), h(&a));
        assert_ne!(h(&a), h(&b));
        assert_eq!(h(&a).len(), 64);
    }
}
