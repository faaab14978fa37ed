//! Physical constants (SI, CODATA 2018 exact or recommended values).

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;
/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Vacuum permeability, H/m.
pub const MU_0: f64 = 1.256_637_062_12e-6;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Angular frequency (rad/s) corresponding to a photon energy of 1 eV.
pub const RAD_S_PER_EV: f64 = ELEMENTARY_CHARGE / HBAR;

/// First nonzero Matsubara frequency `2π k_B T / ħ` in rad/s.
pub fn matsubara_frequency(temperature: f64) -> f64 {
    2.0 * std::f64::consts::PI * K_B * temperature / HBAR
}
