//! Run configuration: the TOML file as written, and the fully resolved
//! settings after tier defaults are applied.

use hermite_dirac::monopole::box_radius;
use hermite_dirac::units::{bohr_to_fm, point_nucleus_1s_energy, URANIUM_RMS_RADIUS_FM};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Stationary,
    Collide1d,
    Collide2d,
    Collide3d,
    Sweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    #[serde(rename = "1d")]
    Monopole,
    #[serde(rename = "2d")]
    Axial,
    #[serde(rename = "3d")]
    Cartesian,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Point,
    Sphere,
}

/// A validation failure, located by its dotted field path.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// The configuration file. Unset fields take the tier defaults.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub tier: Option<Tier>,
    /// Impact parameters in fm.
    #[serde(default)]
    pub b_fm: Vec<f64>,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub stationary: StationaryConfig,
    #[serde(default)]
    pub monopole: MonopoleConfig,
    #[serde(default)]
    pub axial: AxialConfig,
    #[serde(default)]
    pub cartesian: CartesianConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub checkpoint: CheckpointConfig,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub z_a: Option<f64>,
    pub z_b: Option<f64>,
    pub model: Option<Model>,
    pub rms_radius_fm: Option<f64>,
    pub energy_mev_per_u: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationaryConfig {
    pub geometry: Option<Geometry>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonopoleConfig {
    pub box_fm: Option<f64>,
    pub intervals: Option<usize>,
    pub steps: Option<usize>,
    pub determinant: Option<bool>,
    pub sample_every: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxialConfig {
    pub rho_max_fm: Option<f64>,
    pub rho_splines: Option<usize>,
    pub z_lo_fm: Option<f64>,
    pub z_hi_fm: Option<f64>,
    pub z_splines: Option<usize>,
    pub steps: Option<usize>,
    pub bicgstab_tol: Option<f64>,
    pub sample_every: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CartesianConfig {
    pub width_fm: Option<f64>,
    pub splines_xy: Option<usize>,
    pub z_lo_fm: Option<f64>,
    pub z_hi_fm: Option<f64>,
    pub splines_z: Option<usize>,
    pub steps: Option<usize>,
    pub bicgstab_tol: Option<f64>,
    pub sample_every: Option<usize>,
    /// Replace the interpolated 1s by the nearest lattice eigenstate.
    pub relax: Option<bool>,
    /// Shift for the relaxation, hartree.
    pub relax_shift: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub geometry: Option<Geometry>,
    pub jobs: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointConfig {
    /// Steps between checkpoints of 2D and 3D runs; 0 disables them.
    pub every: Option<usize>,
    pub resume: Option<bool>,
}

/// Fully resolved settings. Their JSON form is what the config hash covers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub mode: Mode,
    pub tier: Tier,
    pub geometry: Geometry,
    pub b_fm: Vec<f64>,
    pub system: System,
    pub monopole: Monopole,
    pub axial: Axial,
    pub cartesian: Cartesian,
    pub jobs: usize,
    pub checkpoint_every: usize,
    pub resume: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct System {
    pub z_a: f64,
    pub z_b: f64,
    pub model: Model,
    pub rms_radius_fm: f64,
    pub energy_mev_per_u: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Monopole {
    pub box_fm: f64,
    pub intervals: usize,
    pub steps: usize,
    pub determinant: bool,
    pub sample_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axial {
    pub rho_max_fm: f64,
    pub rho_splines: usize,
    pub z_lo_fm: f64,
    pub z_hi_fm: f64,
    pub z_splines: usize,
    pub steps: usize,
    pub bicgstab_tol: f64,
    pub sample_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cartesian {
    pub width_fm: f64,
    pub splines_xy: usize,
    pub z_lo_fm: f64,
    pub z_hi_fm: f64,
    pub splines_z: usize,
    pub steps: usize,
    pub bicgstab_tol: f64,
    pub sample_every: usize,
    pub relax: bool,
    pub relax_shift: f64,
}

pub fn parse(text: &str) -> Result<RunConfig, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::new("", e.to_string().trim_end().to_string()))
}

fn positive(path: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::new(path, format!("must be positive, got {v}")))
    }
}

fn splines(path: &str, n: usize) -> Result<usize, ConfigError> {
    if n >= 2 && n % 2 == 0 {
        Ok(n)
    } else {
        Err(ConfigError::new(path, format!("must be even and at least 2, got {n}")))
    }
}

fn nonzero(path: &str, n: usize) -> Result<usize, ConfigError> {
    if n > 0 {
        Ok(n)
    } else {
        Err(ConfigError::new(path, "must be at least 1"))
    }
}

fn z_range(section: &str, lo: f64, hi: f64) -> Result<(f64, f64), ConfigError> {
    if !(lo < 0.0 && lo.is_finite()) {
        return Err(ConfigError::new(format!("{section}.z_lo_fm"), format!("must be negative, got {lo}")));
    }
    positive(&format!("{section}.z_hi_fm"), hi)?;
    Ok((lo, hi))
}

impl RunConfig {
    /// Applies the tier defaults and checks every field. `tier` overrides
    /// the file's own tier.
    pub fn resolve(&self, tier: Option<Tier>) -> Result<Settings, ConfigError> {
        let mode = self.mode.ok_or_else(|| ConfigError::new("mode", "missing"))?;
        let tier = tier.or(self.tier).unwrap_or(Tier::Desk);
        let paper = tier == Tier::Paper;

        let s = &self.system;
        let z_a = positive("system.z_a", s.z_a.unwrap_or(92.0))?;
        let z_b = s.z_b.unwrap_or(92.0);
        if !(z_b >= 0.0 && z_b.is_finite()) {
            return Err(ConfigError::new("system.z_b", format!("must be non-negative, got {z_b}")));
        }
        let system = System {
            z_a,
            z_b,
            model: s.model.unwrap_or(Model::Point),
            rms_radius_fm: positive("system.rms_radius_fm", s.rms_radius_fm.unwrap_or(URANIUM_RMS_RADIUS_FM))?,
            energy_mev_per_u: positive("system.energy_mev_per_u", s.energy_mev_per_u.unwrap_or(6.0))?,
        };

        let m = &self.monopole;
        let steps = nonzero("monopole.steps", m.steps.unwrap_or(10_000))?;
        if steps % 2 != 0 {
            return Err(ConfigError::new("monopole.steps", format!("must be even, got {steps}")));
        }
        let monopole = Monopole {
            box_fm: positive("monopole.box_fm", m.box_fm.unwrap_or_else(|| bohr_to_fm(box_radius(z_a))))?,
            intervals: nonzero("monopole.intervals", m.intervals.unwrap_or(97))?,
            steps,
            determinant: m.determinant.unwrap_or(true),
            sample_every: m.sample_every.unwrap_or(100),
        };

        let a = &self.axial;
        let (rho_max, rho_n, z_lo, z_hi, z_n, a_steps) = if paper {
            (5000.0, 52, -5000.0, 15000.0, 200, 15_000)
        } else {
            (2500.0, 26, -2500.0, 7500.0, 100, 3000)
        };
        let (z_lo_fm, z_hi_fm) = z_range("axial", a.z_lo_fm.unwrap_or(z_lo), a.z_hi_fm.unwrap_or(z_hi))?;
        let a_steps = nonzero("axial.steps", a.steps.unwrap_or(a_steps))?;
        let axial = Axial {
            rho_max_fm: positive("axial.rho_max_fm", a.rho_max_fm.unwrap_or(rho_max))?,
            rho_splines: splines("axial.rho_splines", a.rho_splines.unwrap_or(rho_n))?,
            z_lo_fm,
            z_hi_fm,
            z_splines: splines("axial.z_splines", a.z_splines.unwrap_or(z_n))?,
            steps: a_steps,
            bicgstab_tol: positive("axial.bicgstab_tol", a.bicgstab_tol.unwrap_or(1e-12))?,
            sample_every: a.sample_every.unwrap_or((a_steps / 100).max(1)),
        };

        let c = &self.cartesian;
        let (n_xy, n_z) = if paper { (40, 80) } else { (16, 32) };
        let (z_lo_fm, z_hi_fm) = z_range("cartesian", c.z_lo_fm.unwrap_or(-3450.0), c.z_hi_fm.unwrap_or(10350.0))?;
        let c_steps = nonzero("cartesian.steps", c.steps.unwrap_or(1024))?;
        let cartesian = Cartesian {
            width_fm: positive("cartesian.width_fm", c.width_fm.unwrap_or(6900.0))?,
            splines_xy: splines("cartesian.splines_xy", c.splines_xy.unwrap_or(n_xy))?,
            z_lo_fm,
            z_hi_fm,
            splines_z: splines("cartesian.splines_z", c.splines_z.unwrap_or(n_z))?,
            steps: c_steps,
            bicgstab_tol: positive("cartesian.bicgstab_tol", c.bicgstab_tol.unwrap_or(1e-10))?,
            sample_every: c.sample_every.unwrap_or((c_steps / 64).max(1)),
            relax: c.relax.unwrap_or(!paper),
            relax_shift: c.relax_shift.unwrap_or_else(|| point_nucleus_1s_energy(z_a)),
        };
        if !cartesian.relax_shift.is_finite() {
            return Err(ConfigError::new("cartesian.relax_shift", "must be finite"));
        }

        let geometry = match mode {
            Mode::Stationary => self.stationary.geometry.unwrap_or(Geometry::Monopole),
            Mode::Collide1d => Geometry::Monopole,
            Mode::Collide2d => Geometry::Axial,
            Mode::Collide3d => Geometry::Cartesian,
            Mode::Sweep => self
                .sweep
                .geometry
                .ok_or_else(|| ConfigError::new("sweep.geometry", "missing; expected \"1d\", \"2d\" or \"3d\""))?,
        };
        if mode != Mode::Stationary {
            if self.b_fm.is_empty() {
                return Err(ConfigError::new("b_fm", format!("at least one impact parameter is required in mode {mode:?}")));
            }
            for (i, &b) in self.b_fm.iter().enumerate() {
                if !(b >= 0.0 && b.is_finite()) {
                    return Err(ConfigError::new(
                        format!("b_fm[{i}]"),
                        format!("impact parameter must be non-negative, got {b}"),
                    ));
                }
            }
        }
        let jobs = if mode == Mode::Sweep {
            nonzero("sweep.jobs", self.sweep.jobs.unwrap_or(1))?
        } else {
            1
        };

        Ok(Settings {
            mode,
            tier,
            geometry,
            b_fm: self.b_fm.clone(),
            system,
            monopole,
            axial,
            cartesian,
            jobs,
            checkpoint_every: self.checkpoint.every.unwrap_or(0),
            resume: self.checkpoint.resume.unwrap_or(false),
        })
    }
}
