//! Physical constants and unit conversions.
//!
//! Every constant the solvers depend on lives here so that tables are
//! reproducible to the last digit.

/// Speed of light in atomic units.
pub const SPEED_OF_LIGHT: f64 = 137.035999;

/// One bohr in femtometres.
pub const FM_PER_BOHR: f64 = 52917.7;

/// Atomic mass unit rest energy in MeV.
pub const AMU_MEV: f64 = 931.494;

/// Electron rest energy `c^2` in hartree.
pub const REST_ENERGY: f64 = SPEED_OF_LIGHT * SPEED_OF_LIGHT;

/// Uranium root-mean-square nuclear charge radius in fm.
pub const URANIUM_RMS_RADIUS_FM: f64 = 5.8569;

pub fn fm_to_bohr(fm: f64) -> f64 {
    fm / FM_PER_BOHR
}

pub fn bohr_to_fm(bohr: f64) -> f64 {
    bohr * FM_PER_BOHR
}

/// Converts a rest-energy-subtracted energy to the total energy in units of `mc^2`.
pub fn energy_in_rest_units(energy: f64) -> f64 {
    energy / REST_ENERGY + 1.0
}

/// Sommerfeld ground-state energy of a point-nucleus hydrogen-like ion,
/// with the rest energy subtracted.
pub fn point_nucleus_1s_energy(z: f64) -> f64 {
    let za = z / SPEED_OF_LIGHT;
    REST_ENERGY * ((1.0 - za * za).sqrt() - 1.0)
}
