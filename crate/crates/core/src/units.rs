//! Unit conversions used at I/O boundaries. Everything internal is in atomic units.

/// 1 hartree in cm⁻¹.
pub const HARTREE_TO_CM: f64 = 219474.6313632;

/// 1 atomic mass unit (dalton) in electron masses.
pub const AMU_TO_ME: f64 = 1822.888486;

pub fn cm_to_hartree(cm: f64) -> f64 {
    cm / HARTREE_TO_CM
}

pub fn hartree_to_cm(h: f64) -> f64 {
    h * HARTREE_TO_CM
}
