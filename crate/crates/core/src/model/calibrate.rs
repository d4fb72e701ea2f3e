use std::sync::Arc;

use super::{build_surface_set, CavityMode, DipoleModel, MorseParams, SurfaceVariant};
use crate::eigen::{relax_eigenstates, RelaxationConfig};
use crate::error::{Error, Result};
use crate::griddyn::ProductGrid;
use crate::units::{cm_to_hartree, hartree_to_cm};

/// Result of fitting the dipole slope to a target Rabi splitting.
#[derive(Clone, Debug)]
pub struct Calibration {
    pub dipole: DipoleModel,
    /// Achieved UP(1) − LP(1), cm⁻¹.
    pub rabi_cm: f64,
    /// Pipeline evaluations spent.
    pub evaluations: usize,
}

/// Accuracy to which the achieved splitting is driven, cm⁻¹.
pub const CALIBRATION_TOL_CM: f64 = 0.05;
const MAX_EVALUATIONS: usize = 40;

/// Lowest-order splitting 2 λc √(ωc/2) μ01 with μ01 = μ′/√(2 m ω1), in cm⁻¹.
pub fn first_order_rabi_cm(slope: f64, cav: &CavityMode, morse: &MorseParams) -> f64 {
    let omega1 = cm_to_hartree(morse.transition_cm(0));
    let mu01 = slope / (2.0 * morse.mass * omega1).sqrt();
    hartree_to_cm(2.0 * cav.lambda_c() * (cav.omega_c / 2.0).sqrt() * mu01)
}

/// Full-variant surface → eigenstates → UP(1) − LP(1) for one slope.
pub fn rabi_splitting_for_slope(
    slope: f64,
    grid: &Arc<ProductGrid<f64>>,
    morse: &MorseParams,
    template: &DipoleModel,
    cav: &CavityMode,
    cfg: &RelaxationConfig,
) -> Result<f64> {
    let dip = template.with_slope(slope)?;
    let s = build_surface_set(grid.clone(), morse, &dip, cav, SurfaceVariant::Full)?;
    Ok(relax_eigenstates(&s, cfg)?.rabi_splitting_cm())
}

/// Find μ′ such that the single-molecule Rabi splitting equals `target_rabi_cm`,
/// by bracketing from the first-order estimate and Illinois regula falsi.
pub fn calibrate_dipole_slope(
    target_rabi_cm: f64,
    cav: &CavityMode,
    morse: &MorseParams,
    template: &DipoleModel,
    grid: &Arc<ProductGrid<f64>>,
    cfg: &RelaxationConfig,
) -> Result<Calibration> {
    if !(target_rabi_cm > 0.0) || !target_rabi_cm.is_finite() {
        return Err(Error::Calibration(format!("target splitting must be positive, got {target_rabi_cm}")));
    }
    if cav.n_mol != 1 {
        return Err(Error::Calibration("calibration uses a single molecule".into()));
    }
    if !(cav.lambda0 > 0.0) {
        return Err(Error::Calibration("no splitting is achievable without coupling (lambda0 = 0)".into()));
    }
    template.slope().ok_or_else(|| Error::Calibration("calibration needs a linear dipole".into()))?;
    let per_unit = first_order_rabi_cm(1.0, cav, morse);
    let seed = target_rabi_cm / per_unit;
    let evals = std::cell::Cell::new(0usize);
    let f = |slope: f64| -> Result<f64> {
        evals.set(evals.get() + 1);
        Ok(rabi_splitting_for_slope(slope, grid, morse, template, cav, cfg)? - target_rabi_cm)
    };

    // The splitting grows with |μ′|; expand geometrically until the target is bracketed.
    let (mut a, mut b) = (seed * 0.8, seed * 1.25);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    let mut expansions = 0;
    while fa * fb > 0.0 {
        expansions += 1;
        if expansions > 8 {
            return Err(Error::Calibration(format!(
                "could not bracket {target_rabi_cm} cm^-1 between slopes {a:.4} and {b:.4}"
            )));
        }
        if fa > 0.0 {
            b = a;
            fb = fa;
            a *= 0.5;
            fa = f(a)?;
        } else {
            a = b;
            fa = fb;
            b *= 2.0;
            fb = f(b)?;
        }
    }
    let mut side = 0i8;
    let (mut best, mut fbest) = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    while fbest.abs() > CALIBRATION_TOL_CM {
        if evals.get() >= MAX_EVALUATIONS {
            return Err(Error::Calibration(format!(
                "no convergence after {} evaluations (residual {fbest:.3} cm^-1)",
                evals.get()
            )));
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c)?;
        if fc * fb > 0.0 {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        if fc.abs() < fbest.abs() {
            best = c;
            fbest = fc;
        }
    }
    Ok(Calibration {
        dipole: template.with_slope(best)?,
        rabi_cm: target_rabi_cm + fbest,
        evaluations: evals.get(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fit_morse_to_transitions;

    #[test]
    fn zero_coupling_is_rejected() {
        let morse = fit_morse_to_transitions(4281.0, 4108.0, 1744.59, 1.7329).unwrap();
        let cav = CavityMode::new(cm_to_hartree(4281.0), 0.0, 1).unwrap();
        let dip = DipoleModel::linear(0.0, 0.3, 1.7329, 0.35, 0.35);
        let g = Arc::new(
            ProductGrid::new(vec![crate::griddyn::Axis::new(crate::griddyn::AxisLabel::Qc, 16, -1.0, 1.0, 1.0).unwrap()])
                .unwrap(),
        );
        let r = calibrate_dipole_slope(60.0, &cav, &morse, &dip, &g, &RelaxationConfig::default());
        assert!(matches!(r, Err(Error::Calibration(_))));
    }

    #[test]
    fn first_order_estimate() {
        let morse = fit_morse_to_transitions(4281.0, 4108.0, 1744.59, 1.7329).unwrap();
        let cav = CavityMode::new(cm_to_hartree(4281.0), 0.03, 1).unwrap();
        let est = first_order_rabi_cm(0.33, &cav, &morse);
        assert!((est - 52.0).abs() < 1.0, "{est}");
    }
}
