//! Morse molecules, dipole functions and a two-level electronic model in a cavity mode;
//! construction of the full, linear, ETC and field-free surface sets.

mod calibrate;
mod cavity;
mod dipole;
mod morse;
mod scf;
mod surface;

pub use calibrate::{
    calibrate_dipole_slope, first_order_rabi_cm, rabi_splitting_for_slope, Calibration, CALIBRATION_TOL_CM,
};
pub use cavity::CavityMode;
pub use dipole::{nuclear_dipole, DipoleModel, NuclearDipole};
pub use morse::{fit_morse_to_transitions, morse_potential, MorseParams};
pub use scf::{scf_electronic_ground, ScfSettings, ScfState, SurfaceVariant};
pub use surface::{
    build_surface_set, build_surface_set_with, load_surface_set, read_surface_set, save_surface_set,
    write_surface_set, SurfaceSet,
};
pub(crate) use surface::{format_axis, parse_axis};
