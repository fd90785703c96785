//! Nuclear charge models, one- and two-center potentials and straight-line
//! collision kinematics.
//!
//! The target `A` sits at the origin. The projectile `B` moves along a
//! straight line with impact parameter `b` and constant speed `v`; its
//! closest approach happens at `t = 0`, so the internuclear distance is
//! `R(t) = sqrt((v t)^2 + b^2)`.

use crate::units::{fm_to_bohr, AMU_MEV, SPEED_OF_LIGHT, URANIUM_RMS_RADIUS_FM};
use crate::{Error, Result};

/// Charge distribution of a nucleus.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NuclearModel {
    Point,
    /// Uniformly charged ball with the given root-mean-square radius in fm.
    Sphere { rms_radius_fm: f64 },
}

impl NuclearModel {
    pub fn uranium_sphere() -> Self {
        Self::Sphere {
            rms_radius_fm: URANIUM_RMS_RADIUS_FM,
        }
    }

    /// Ball radius `R_n = sqrt(5/3) R_rms` in bohr, or `None` for a point charge.
    pub fn radius(&self) -> Option<f64> {
        match *self {
            Self::Point => None,
            Self::Sphere { rms_radius_fm } => Some((5.0f64 / 3.0).sqrt() * fm_to_bohr(rms_radius_fm)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Sphere { rms_radius_fm } if !(rms_radius_fm > 0.0 && rms_radius_fm.is_finite()) => {
                Err(Error::InvalidArgument(format!(
                    "nuclear rms radius must be positive, got {rms_radius_fm} fm"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Potential energy of an electron at distance `r` from a nucleus of charge `z`.
pub fn nuclear_potential(model: NuclearModel, z: f64, r: f64) -> Result<f64> {
    if !(r >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative distance {r}")));
    }
    match model.radius() {
        None if r == 0.0 => Err(Error::NonFinite {
            x: r,
            value: f64::NEG_INFINITY,
        }),
        None => Ok(-z / r),
        Some(rn) if r < rn => Ok(-z / (2.0 * rn) * (3.0 - r * r / (rn * rn))),
        Some(_) => Ok(-z / r),
    }
}

/// Spherical average about the target of a point charge `z` at distance `big_r`.
pub fn monopole_potential(z: f64, big_r: f64, r: f64) -> Result<f64> {
    if !(big_r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "monopole radius must be positive, got {big_r}"
        )));
    }
    Ok(-z / r.max(big_r))
}

/// Projectile speed in atomic units for a kinetic energy per nucleon in MeV/u.
pub fn projectile_velocity(energy_per_nucleon: f64) -> f64 {
    let gamma = 1.0 + energy_per_nucleon / AMU_MEV;
    SPEED_OF_LIGHT * (1.0 - 1.0 / (gamma * gamma)).sqrt()
}

/// Target, projectile and beam energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollisionSystem {
    pub z_a: f64,
    pub z_b: f64,
    pub model_a: NuclearModel,
    pub model_b: NuclearModel,
    /// MeV/u.
    pub energy_per_nucleon: f64,
}

impl CollisionSystem {
    /// Bare uranium on hydrogen-like uranium at 6 MeV/u.
    pub fn uranium(model: NuclearModel) -> Self {
        Self {
            z_a: 92.0,
            z_b: 92.0,
            model_a: model,
            model_b: model,
            energy_per_nucleon: 6.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.z_a >= 0.0 && self.z_b >= 0.0) {
            return Err(Error::InvalidArgument("nuclear charges must be non-negative".into()));
        }
        if !(self.energy_per_nucleon > 0.0 && self.energy_per_nucleon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "energy per nucleon must be positive, got {}",
                self.energy_per_nucleon
            )));
        }
        self.model_a.validate()?;
        self.model_b.validate()
    }

    pub fn velocity(&self) -> f64 {
        projectile_velocity(self.energy_per_nucleon)
    }

    pub fn target_potential(&self, r: f64) -> Result<f64> {
        nuclear_potential(self.model_a, self.z_a, r)
    }

    pub fn projectile_potential(&self, r: f64) -> Result<f64> {
        if self.z_b == 0.0 {
            return Ok(0.0);
        }
        nuclear_potential(self.model_b, self.z_b, r)
    }
}

/// Straight-line projectile path relative to the target.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Trajectory {
    /// Speed in a.u.
    pub v: f64,
    /// Impact parameter in bohr; the projectile passes at `x = b`, so a
    /// negative value mirrors the path.
    pub b: f64,
    /// Projectile `z` coordinate at the start of the run (negative: incoming).
    pub z_start: f64,
}

impl Trajectory {
    pub fn new(v: f64, b: f64, z_start: f64) -> Result<Self> {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("velocity must be positive, got {v}")));
        }
        if !b.is_finite() {
            return Err(Error::InvalidArgument(format!("impact parameter must be finite, got {b}")));
        }
        Ok(Self { v, b, z_start })
    }

    /// Path that starts where the internuclear distance equals `r_start`.
    pub fn starting_at_distance(v: f64, b: f64, r_start: f64) -> Result<Self> {
        if !(r_start >= b.abs()) {
            return Err(Error::InvalidArgument(format!(
                "start distance {r_start} is inside the impact parameter {b}"
            )));
        }
        Self::new(v, b, -(r_start * r_start - b * b).sqrt())
    }

    pub fn start_time(&self) -> f64 {
        self.z_start / self.v
    }

    /// Positive time at which the internuclear distance grows to `r`.
    pub fn time_at_distance(&self, r: f64) -> f64 {
        (r * r - self.b * self.b).max(0.0).sqrt() / self.v
    }

    pub fn distance(&self, t: f64) -> f64 {
        internuclear_distance(self, t)
    }

    /// Projectile position `(b, 0, v t)`.
    pub fn position(&self, t: f64) -> [f64; 3] {
        [self.b, 0.0, self.v * t]
    }

    /// Projectile `z` in the head-on reduction: on the axis at distance
    /// `R(t)`, before the target for `t < 0` and behind it afterwards.
    pub fn axial_position(&self, t: f64) -> f64 {
        let r = self.distance(t);
        if t < 0.0 {
            -r
        } else {
            r
        }
    }
}

pub fn internuclear_distance(traj: &Trajectory, t: f64) -> f64 {
    (traj.v * t).hypot(traj.b)
}

/// Electron coordinate for [`two_center_potential`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Position {
    /// `(x, y, z)` with the projectile at [`Trajectory::position`].
    Cartesian([f64; 3]),
    /// `(rho, z)` with the projectile on the axis at [`Trajectory::axial_position`].
    Cylindrical { rho: f64, z: f64 },
}

/// `V_A(r_A) + V_B(r_B)` at time `t`.
pub fn two_center_potential(
    system: &CollisionSystem,
    traj: &Trajectory,
    t: f64,
    position: Position,
) -> Result<f64> {
    let (ra, rb) = match position {
        Position::Cartesian([x, y, z]) => {
            let [bx, by, bz] = traj.position(t);
            (
                (x * x + y * y + z * z).sqrt(),
                ((x - bx).powi(2) + (y - by).powi(2) + (z - bz).powi(2)).sqrt(),
            )
        }
        Position::Cylindrical { rho, z } => {
            let zb = traj.axial_position(t);
            (rho.hypot(z), rho.hypot(z - zb))
        }
    };
    Ok(system.target_potential(ra)? + system.projectile_potential(rb)?)
}
