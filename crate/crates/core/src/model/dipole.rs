use crate::error::{Error, Result};

/// Nuclear (permanent) dipole function along the bond.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NuclearDipole {
    /// μ0 + μ′ (r − re).
    Linear { mu0: f64, slope: f64, re: f64 },
    /// q r exp(−r / r*).
    Mecke { charge: f64, r_star: f64 },
}

impl NuclearDipole {
    /// Mecke form matching value and slope of the linear form at `re`.
    pub fn mecke_matching(mu0: f64, slope: f64, re: f64) -> Result<Self> {
        if mu0 == 0.0 {
            return Err(Error::InvalidParameter("Mecke dipole needs a nonzero mu0".into()));
        }
        let denom = 1.0 - re * slope / mu0;
        if !(denom > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "no Mecke dipole with mu0 = {mu0}, slope = {slope} at re = {re}"
            )));
        }
        let r_star = re / denom;
        let charge = mu0 / (re * (-re / r_star).exp());
        Ok(NuclearDipole::Mecke { charge, r_star })
    }

    pub fn value(&self, r: f64) -> f64 {
        match *self {
            NuclearDipole::Linear { mu0, slope, re } => mu0 + slope * (r - re),
            NuclearDipole::Mecke { charge, r_star } => charge * r * (-r / r_star).exp(),
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            NuclearDipole::Linear { slope, .. } => slope,
            NuclearDipole::Mecke { charge, r_star } => charge * (-r / r_star).exp() * (1.0 - r / r_star),
        }
    }
}

/// Molecular dipole operator μ̂ = μ_nuc(r) + d σx with a two-level electronic part of gap Δe.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DipoleModel {
    pub nuclear: NuclearDipole,
    /// Electronic excitation gap Δe, hartree.
    pub gap: f64,
    /// Electronic transition dipole d, atomic units.
    pub transition: f64,
}

impl DipoleModel {
    pub fn linear(mu0: f64, slope: f64, re: f64, gap: f64, transition: f64) -> Self {
        DipoleModel {
            nuclear: NuclearDipole::Linear { mu0, slope, re },
            gap,
            transition,
        }
    }

    /// Checks against a photon frequency `omega_c` (hartree).
    pub fn validate(&self, omega_c: f64) -> Result<()> {
        if !(self.transition >= 0.0) || !self.transition.is_finite() {
            return Err(Error::InvalidParameter("electronic transition dipole must be >= 0".into()));
        }
        if !(self.gap > 10.0 * omega_c) {
            return Err(Error::InvalidParameter(format!(
                "electronic gap {} hartree must exceed 10 omega_c = {}",
                self.gap,
                10.0 * omega_c
            )));
        }
        match self.nuclear {
            NuclearDipole::Linear { mu0, slope, re } => {
                if !(mu0.is_finite() && slope.is_finite() && re > 0.0) {
                    return Err(Error::InvalidParameter("linear dipole parameters must be finite".into()));
                }
            }
            NuclearDipole::Mecke { charge, r_star } => {
                if !(charge.is_finite() && r_star > 0.0) {
                    return Err(Error::InvalidParameter("Mecke decay length must be positive".into()));
                }
            }
        }
        Ok(())
    }

    /// Static polarizability of the two-level part, 2d²/Δe.
    pub fn polarizability(&self) -> f64 {
        2.0 * self.transition * self.transition / self.gap
    }

    /// Same model with the nuclear slope at `re` replaced, keeping the form.
    pub fn with_slope(&self, slope: f64) -> Result<Self> {
        let nuclear = match self.nuclear {
            NuclearDipole::Linear { mu0, re, .. } => NuclearDipole::Linear { mu0, slope, re },
            NuclearDipole::Mecke { .. } => {
                return Err(Error::InvalidParameter(
                    "slope replacement needs the linear form; build Mecke from a linear template".into(),
                ))
            }
        };
        Ok(DipoleModel { nuclear, ..*self })
    }

    pub fn slope(&self) -> Option<f64> {
        match self.nuclear {
            NuclearDipole::Linear { slope, .. } => Some(slope),
            NuclearDipole::Mecke { .. } => None,
        }
    }
}

pub fn nuclear_dipole(r: f64, m: &DipoleModel) -> f64 {
    m.nuclear.value(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_form() {
        let m = DipoleModel::linear(0.7, 0.38, 1.7329, 0.35, 0.35);
        assert_eq!(nuclear_dipole(1.7329, &m), 0.7);
        let flat = DipoleModel::linear(0.7, 0.0, 1.7329, 0.35, 0.35);
        for r in [0.9, 1.5, 3.0] {
            assert_eq!(nuclear_dipole(r, &flat), 0.7);
        }
    }

    #[test]
    fn mecke_matches_value_and_slope() {
        let (mu0, slope, re) = (0.7, 0.38, 1.7329);
        let mk = NuclearDipole::mecke_matching(mu0, slope, re).unwrap();
        // Independent check: finite-difference slope and direct value.
        let h = 1e-5;
        let fd = (mk.value(re + h) - mk.value(re - h)) / (2.0 * h);
        assert!((mk.value(re) - mu0).abs() < 1e-12);
        assert!((mk.derivative(re) - slope).abs() < 1e-12);
        assert!((fd - slope).abs() < 1e-8);
        assert!(NuclearDipole::mecke_matching(0.1, 1.0, re).is_err());
    }

    #[test]
    fn gap_must_be_off_resonant() {
        let m = DipoleModel::linear(0.7, 0.38, 1.7329, 0.1, 0.35);
        assert!(m.validate(0.0195).is_err());
        let m = DipoleModel::linear(0.7, 0.38, 1.7329, 0.35, 0.35);
        assert!(m.validate(0.0195).is_ok());
        assert!((m.polarizability() - 0.7).abs() < 1e-12);
    }
}
