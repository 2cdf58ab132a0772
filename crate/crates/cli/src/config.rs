//! Problem configuration files.
//!
//! A config names one geometry source (`[plate]`, `[mesh]`, `[annulus]` or
//! `[lshape]`), the materials it uses, the non-dimensionalizing scales, and
//! the adaptive sweep settings:
//!
//! ```toml
//! [scales]
//! a = 0.002
//! c_t = 3000.0
//!
//! [materials.M21T800]
//! kind = "transversely_isotropic"
//! e1 = 171e9
//! e2 = 11.47e9
//! g12 = 4.83e9
//! nu12 = 0.33
//! nu23 = 0.33
//! rho = 1600.0
//!
//! [plate]
//! material = "M21T800"
//! angles = [0.0, 90.0, 45.0, -45.0]
//! repeat = 2
//! symmetric = true
//! ply_thickness = 0.25e-3
//!
//! [adaptive]
//! k_min = 0.1
//! k_max = 7.0
//! n0 = 70
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use disperkit::materials::transversely_isotropic_stiffness;
use disperkit::verify::Tolerances;
use disperkit::{
    assemble, build_annulus_mesh, build_lshape_mesh, build_plate_mesh, AdaptiveConfig, CrossSectionMesh, LShape, Layup,
    Material, SafeMatrices, Scales,
};
use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub scales: ScalesConfig,
    #[serde(default)]
    pub materials: BTreeMap<String, MaterialConfig>,
    pub plate: Option<PlateConfig>,
    pub mesh: Option<MeshFileConfig>,
    pub annulus: Option<AnnulusConfig>,
    pub lshape: Option<LShapeConfig>,
    #[serde(default)]
    pub adaptive: AdaptiveSection,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub verify: VerifySection,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalesConfig {
    /// Characteristic length, m.
    pub a: f64,
    /// Characteristic velocity, m/s.
    pub c_t: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaterialConfig {
    Isotropic { e: f64, nu: f64, rho: f64 },
    TransverselyIsotropic { e1: f64, e2: f64, g12: f64, nu12: f64, nu23: f64, rho: f64 },
}

impl MaterialConfig {
    pub fn build(&self) -> disperkit::Result<Material> {
        match *self {
            Self::Isotropic { e, nu, rho } => Material::isotropic(e, nu, rho),
            Self::TransverselyIsotropic { e1, e2, g12, nu12, nu23, rho } => {
                transversely_isotropic_stiffness(e1, e2, g12, nu12, nu23, rho)
            }
        }
    }
}

fn default_order() -> usize {
    4
}

fn one() -> usize {
    1
}

/// Laminate built from a stacking sequence; lengths in metres.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlateConfig {
    pub material: String,
    pub angles: Vec<f64>,
    #[serde(default = "one")]
    pub repeat: usize,
    #[serde(default)]
    pub symmetric: bool,
    pub ply_thickness: f64,
    /// GLL order per ply.
    #[serde(default = "default_order")]
    pub order: usize,
}

/// Text mesh file; coordinates are already divided by `a`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshFileConfig {
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
}

/// Radii in units of `a`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusConfig {
    pub material: String,
    pub r_in: f64,
    pub r_out: f64,
    pub n_circ: usize,
    pub n_rad: usize,
}

/// Leg lengths in units of `a`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LShapeConfig {
    pub material: String,
    pub width: f64,
    pub height: f64,
    pub thickness: f64,
    pub n_thick: usize,
    pub n_width: usize,
    pub n_height: usize,
}

/// Mirrors [`AdaptiveConfig`]; unset keys take the library defaults.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdaptiveSection {
    pub k_min: f64,
    pub k_max: f64,
    pub v_p_max: f64,
    pub eps_bar: f64,
    pub delta_k_min: f64,
    pub n0: usize,
    pub eps_eig: f64,
    pub coupling_tol: f64,
    pub max_iterations: usize,
    pub subspace_tracking: bool,
    pub window_margin: f64,
}

impl Default for AdaptiveSection {
    fn default() -> Self {
        let d = AdaptiveConfig::default();
        Self {
            k_min: d.k_min,
            k_max: d.k_max,
            v_p_max: d.v_p_max,
            eps_bar: d.eps_bar,
            delta_k_min: d.delta_k_min,
            n0: d.n0,
            eps_eig: d.eps_eig,
            coupling_tol: d.coupling_tol,
            max_iterations: d.max_iterations,
            subspace_tracking: d.subspace_tracking,
            window_margin: d.window_margin,
        }
    }
}

impl From<&AdaptiveSection> for AdaptiveConfig {
    fn from(s: &AdaptiveSection) -> Self {
        AdaptiveConfig {
            k_min: s.k_min,
            k_max: s.k_max,
            v_p_max: s.v_p_max,
            eps_bar: s.eps_bar,
            delta_k_min: s.delta_k_min,
            n0: s.n0,
            eps_eig: s.eps_eig,
            coupling_tol: s.coupling_tol,
            max_iterations: s.max_iterations,
            subspace_tracking: s.subspace_tracking,
            window_margin: s.window_margin,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; `--out` overrides it. Relative to the working directory.
    pub dir: PathBuf,
    pub csv: String,
    pub json: String,
    pub svg: String,
    /// Write the SVG plot even without `--svg`.
    pub plot: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("."),
            csv: "dispersion.csv".into(),
            json: "diagnostics.json".into(),
            svg: "dispersion.svg".into(),
            plot: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    /// Number of sampled wavenumbers.
    pub samples: usize,
    /// Derivative against finite differences.
    pub fd_tol: f64,
    /// Taylor-fit recovery, relative.
    pub fit_tol: f64,
    pub hf_tol: f64,
}

impl Default for VerifySection {
    fn default() -> Self {
        let t = Tolerances::default();
        Self { samples: 5, fd_tol: t.derivative, fit_tol: t.taylor, hf_tol: t.hellmann_feynman }
    }
}

impl VerifySection {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { derivative: self.fd_tol, taylor: self.fit_tol, hellmann_feynman: self.hf_tol }
    }
}

/// A parsed and validated config plus where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub problem: ProblemConfig,
}

impl ProblemConfig {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::config(path, e.to_string()))
    }

    pub fn adaptive_config(&self) -> AdaptiveConfig {
        AdaptiveConfig::from(&self.adaptive)
    }

    fn geometry_sources(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.plate.is_some() {
            v.push("plate");
        }
        if self.mesh.is_some() {
            v.push("mesh");
        }
        if self.annulus.is_some() {
            v.push("annulus");
        }
        if self.lshape.is_some() {
            v.push("lshape");
        }
        v
    }

    fn material(&self, name: &str) -> std::result::Result<Material, String> {
        let m = self.materials.get(name).ok_or_else(|| format!("unknown material `{name}`"))?;
        m.build().map_err(|e| format!("materials.{name}: {e}"))
    }
}

impl LoadedConfig {
    /// Reads, parses and validates a config file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        let mut problem = ProblemConfig::from_toml(&text, &path)?;
        if let Some(mesh) = problem.mesh.as_mut() {
            if mesh.path.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                mesh.path = base.join(&mesh.path);
            }
        }
        let loaded = Self { path, problem };
        loaded.validate()?;
        Ok(loaded)
    }

    fn fail(&self, message: impl Into<String>) -> CliError {
        CliError::config(&self.path, message)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.problem;
        match p.geometry_sources().as_slice() {
            [_] => {}
            [] => return Err(self.fail("no geometry: give exactly one of [plate], [mesh], [annulus], [lshape]")),
            many => return Err(self.fail(format!("geometry given more than once ({}); keep exactly one", many.join(", ")))),
        }
        let ScalesConfig { a, c_t } = p.scales;
        if !(a > 0.0 && a.is_finite()) {
            return Err(self.fail(format!("scales.a: must be positive, got {a}")));
        }
        if !(c_t > 0.0 && c_t.is_finite()) {
            return Err(self.fail(format!("scales.c_t: must be positive, got {c_t}")));
        }
        if let Some(mesh) = &p.mesh {
            if !mesh.path.is_file() {
                return Err(self.fail(format!("mesh.path: {} does not exist", mesh.path.display())));
            }
        }
        let used = [
            p.plate.as_ref().map(|g| &g.material),
            p.annulus.as_ref().map(|g| &g.material),
            p.lshape.as_ref().map(|g| &g.material),
        ];
        for name in used.into_iter().flatten() {
            p.material(name).map_err(|m| self.fail(m))?;
        }
        if p.verify.samples == 0 {
            return Err(self.fail("verify.samples: must be at least 1"));
        }
        for (field, v) in [("fd_tol", p.verify.fd_tol), ("fit_tol", p.verify.fit_tol), ("hf_tol", p.verify.hf_tol)] {
            if !(v > 0.0) {
                return Err(self.fail(format!("verify.{field}: must be positive, got {v}")));
            }
        }
        p.adaptive_config().validate().map_err(|e| match e {
            disperkit::Error::InvalidConfig(m) => self.fail(format!("adaptive.{m}")),
            other => CliError::Core(other),
        })
    }

    pub fn mesh(&self) -> Result<CrossSectionMesh> {
        let p = &self.problem;
        let material = |name: &str| p.material(name).map_err(|m| self.fail(m));
        let mesh = if let Some(g) = &p.plate {
            let layup = Layup::from_sequence(material(&g.material)?, &g.angles, g.repeat, g.symmetric, g.ply_thickness)?;
            build_plate_mesh(&layup, g.order, p.scales.a)?
        } else if let Some(g) = &p.mesh {
            CrossSectionMesh::load(&g.path).map_err(|e| self.fail(format!("{}: {e}", g.path.display())))?
        } else if let Some(g) = &p.annulus {
            build_annulus_mesh(g.r_in, g.r_out, g.n_circ, g.n_rad, material(&g.material)?)?
        } else if let Some(g) = &p.lshape {
            let shape = LShape {
                width: g.width,
                height: g.height,
                thickness: g.thickness,
                n_thick: g.n_thick,
                n_width: g.n_width,
                n_height: g.n_height,
            };
            build_lshape_mesh(&shape, material(&g.material)?)?
        } else {
            unreachable!("validated: exactly one geometry source")
        };
        Ok(mesh)
    }

    pub fn matrices(&self) -> Result<SafeMatrices> {
        let ScalesConfig { a, c_t } = self.problem.scales;
        Ok(assemble(&self.mesh()?, Scales { a, c_t })?)
    }
}
