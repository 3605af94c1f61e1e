//! CODATA constants used by the membrane model.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_B: f64 = 1.380_649e-23;
/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.274_009_994e-24;
/// Free-electron g-factor (magnitude).
pub const G_E: f64 = 2.002_319_30;
/// First zero of the Bessel function J0.
pub const BESSEL_J0_ZERO: f64 = 2.404_825_557_695_773;
