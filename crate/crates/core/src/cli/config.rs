//! Experiment configuration, read from TOML.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::barycenter::SlopeOptions;
use crate::error::{MfeError, Result};
use crate::functional::FieldScale;
use crate::solver::{ConcentrationOptions, DescentOptions, MinMaxConfig};
use crate::surface::{self, SurfaceMesh};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSpec {
    Sphere {
        level: u32,
    },
    Torus {
        n: usize,
        m: usize,
        #[serde(default = "one")]
        aspect: f64,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

impl MeshSpec {
    /// Builds the mesh; relative file paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<SurfaceMesh> {
        match self {
            MeshSpec::Sphere { level } => SurfaceMesh::unit_sphere(*level),
            MeshSpec::Torus { n, m, aspect } => SurfaceMesh::flat_torus(*n, *m, *aspect),
            MeshSpec::File { path } => surface::read_mesh_file(&base.join(path)),
        }
    }
}

/// Parses `12.5`, `"10pi"`, `"10π"`, `"8*pi"` or `"pi"`.
pub fn parse_rho(text: &str) -> Result<f64> {
    let t = text.trim().to_ascii_lowercase();
    let (coef, pi) = match t.strip_suffix("pi").or_else(|| t.strip_suffix('π')) {
        Some(c) => (c.trim().trim_end_matches('*').trim(), true),
        None => (t.as_str(), false),
    };
    let c = if coef.is_empty() && pi {
        1.0
    } else {
        coef.parse::<f64>()
            .map_err(|_| MfeError::Parse(format!("cannot read `{text}` as a value of rho")))?
    };
    let v = if pi { c * PI } else { c };
    if !v.is_finite() {
        return Err(MfeError::Parse(format!("rho `{text}` is not finite")));
    }
    Ok(v)
}

/// A value of `ρ`, written as a number or as a multiple of `pi`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct Rho(pub f64);

impl<'de> Deserialize<'de> for Rho {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Rho(v)),
            Raw::Text(s) => parse_rho(&s).map(Rho).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default)]
    pub rho1: Rho,
    #[serde(default)]
    pub rho2: Rho,
    #[serde(default = "default_t0")]
    pub t0: f64,
}

fn default_t0() -> f64 {
    0.1
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            rho1: Rho(0.0),
            rho2: Rho(0.0),
            t0: default_t0(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AsymptoticsConfig {
    pub k: usize,
    /// Atom vertices; a farthest-point sample when empty.
    pub atoms: Vec<usize>,
    /// Atom weights; uniform when empty.
    pub weights: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub slope_tol: f64,
    pub dirichlet_max: f64,
    pub spread_max: f64,
    #[serde(flatten)]
    pub slope: SlopeOptions,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        AsymptoticsConfig {
            k: 1,
            atoms: Vec::new(),
            weights: Vec::new(),
            lambda_grid: vec![10.0, 20.0, 50.0, 100.0, 200.0],
            slope_tol: 0.05,
            dirichlet_max: 1.1,
            spread_max: 1.0,
            slope: SlopeOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveConfig {
    /// Start from this many standard deviations of a seeded random field;
    /// zero starts from `u ≡ 0`.
    pub initial_amplitude: f64,
    pub descent: DescentOptions,
    pub minmax: MinMaxConfig,
    /// CSV iterate log, relative to the config file.
    pub iterate_log: Option<PathBuf>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            initial_amplitude: 0.0,
            descent: DescentOptions::default(),
            minmax: MinMaxConfig::default(),
            iterate_log: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MtConfig {
    pub fields: usize,
    pub modes: usize,
    pub scale: FieldScale,
    /// Bound on the variation between the two half-sample maxima.
    pub halves_tol: f64,
    pub bubble_lambdas: Vec<f64>,
    /// Largest allowed change of the bubble offset across the sweep.
    pub bubble_offset_spread: f64,
}

impl Default for MtConfig {
    fn default() -> Self {
        MtConfig {
            fields: 1000,
            modes: 30,
            scale: FieldScale::Dirichlet(1000.0),
            halves_tol: 0.1,
            bubble_lambdas: vec![10.0, 20.0, 50.0, 100.0],
            bubble_offset_spread: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// `φ_{δ_x, λ}` over the λ list.
    OneSided,
    /// `φ_{δ_x, λ} − φ_{δ_y, λ}` with `d(x, y) ≈ separation`.
    TwoSided,
    /// Random smooth fields of fixed amplitude.
    Bounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlowupConfig {
    pub family: FamilyKind,
    pub lambdas: Vec<f64>,
    pub vertex: usize,
    pub separation: f64,
    pub amplitude: f64,
    pub members: usize,
    /// Defaults per family: `(8π, 0)` one-sided, `(24π, 8π)` two-sided,
    /// `(4, 4)` bounded.
    pub rho1: Option<Rho>,
    pub rho2: Option<Rho>,
    /// Relative tolerance of one-sided masses against `8π`.
    pub mass_tol: f64,
    /// Tolerance of the quantization residual, in units of `(8π)²`.
    pub quantization_tol: f64,
    #[serde(flatten)]
    pub options: ConcentrationOptions,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        BlowupConfig {
            family: FamilyKind::OneSided,
            lambdas: vec![50.0, 100.0, 200.0],
            vertex: 0,
            separation: 0.15,
            amplitude: 1.0,
            members: 4,
            rho1: None,
            rho2: None,
            mass_tol: 0.05,
            quantization_tol: 0.05,
            options: ConcentrationOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub mesh: MeshSpec,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub asymptotics: AsymptoticsConfig,
    #[serde(default)]
    pub solve: SolveConfig,
    #[serde(default)]
    pub mt: MtConfig,
    #[serde(default)]
    pub blowup: BlowupConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| MfeError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| MfeError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Rejects non-positive tolerances and unordered grids. The regime of
    /// `ρ` is reported by the commands, never rejected here.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(MfeError::invalid(format!("{name} must be positive")))
            }
        };
        let a = &self.asymptotics;
        positive("asymptotics.slope_tol", a.slope_tol)?;
        positive("asymptotics.dirichlet_max", a.dirichlet_max)?;
        positive("asymptotics.spread_max", a.spread_max)?;
        if a.k == 0 {
            return Err(MfeError::invalid("asymptotics.k must be positive"));
        }
        if !a.atoms.is_empty() && a.atoms.len() != a.k {
            return Err(MfeError::invalid("asymptotics.atoms must list k vertices"));
        }
        if !a.weights.is_empty() && a.weights.len() != a.k {
            return Err(MfeError::invalid("asymptotics.weights must list k weights"));
        }
        ascending("asymptotics.lambda_grid", &a.lambda_grid, false)?;
        let s = &self.solve;
        positive("solve.descent.tol", s.descent.tol)?;
        positive("solve.minmax.newton.tol", s.minmax.newton.tol)?;
        if !(s.initial_amplitude >= 0.0) {
            return Err(MfeError::invalid("solve.initial_amplitude must be non-negative"));
        }
        let m = &self.mt;
        positive("mt.halves_tol", m.halves_tol)?;
        positive("mt.bubble_offset_spread", m.bubble_offset_spread)?;
        m.scale.validate()?;
        if m.fields < 2 || m.modes == 0 {
            return Err(MfeError::invalid("mt needs at least two fields and one mode"));
        }
        ascending("mt.bubble_lambdas", &m.bubble_lambdas, true)?;
        let b = &self.blowup;
        positive("blowup.mass_tol", b.mass_tol)?;
        positive("blowup.quantization_tol", b.quantization_tol)?;
        positive("blowup.separation", b.separation)?;
        positive("blowup.threshold_sigmas", b.options.threshold_sigmas)?;
        if let Some(r) = b.options.r_mass {
            positive("blowup.r_mass", r)?;
        }
        ascending("blowup.lambdas", &b.lambdas, true)?;
        positive("params.t0", self.params.t0)?;
        Ok(())
    }
}

/// Strictly ascending; empty lists pass unless `nonempty`.
pub fn ascending(name: &str, v: &[f64], nonempty: bool) -> Result<()> {
    if nonempty && v.is_empty() {
        return Err(MfeError::invalid(format!("{name} is empty")));
    }
    if v.windows(2).any(|w| !(w[0] < w[1])) || v.iter().any(|x| !x.is_finite()) {
        return Err(MfeError::invalid(format!("{name} must be strictly ascending")));
    }
    Ok(())
}
