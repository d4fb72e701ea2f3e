use crate::error::{Error, Result};

/// One cavity mode polarized along the molecular axes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CavityMode {
    /// Photon frequency, hartree.
    pub omega_c: f64,
    /// Single-molecule coupling strength λ0, atomic units.
    pub lambda0: f64,
    /// Number of molecules, 1 or 2.
    pub n_mol: usize,
}

impl CavityMode {
    pub fn new(omega_c: f64, lambda0: f64, n_mol: usize) -> Result<Self> {
        let c = CavityMode { omega_c, lambda0, n_mol };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega_c > 0.0) || !self.omega_c.is_finite() {
            return Err(Error::InvalidParameter("omega_c must be positive".into()));
        }
        if !(self.lambda0 >= 0.0) || !self.lambda0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lambda0 must be non-negative, got {}",
                self.lambda0
            )));
        }
        if !(1..=2).contains(&self.n_mol) {
            return Err(Error::InvalidParameter(format!("n_mol must be 1 or 2, got {}", self.n_mol)));
        }
        Ok(())
    }

    /// Collective coupling λc = λ0 / √n_mol.
    pub fn lambda_c(&self) -> f64 {
        self.lambda0 / (self.n_mol as f64).sqrt()
    }

    /// Implied mode volume 4π/λc² (infinite without coupling).
    pub fn mode_volume(&self) -> f64 {
        let l = self.lambda_c();
        4.0 * std::f64::consts::PI / (l * l)
    }

    /// Bare photon potential ½ωc²qc².
    pub fn photon_energy(&self, qc: f64) -> f64 {
        0.5 * self.omega_c * self.omega_c * qc * qc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collective_scaling() {
        let c = CavityMode::new(0.0195, 0.03, 2).unwrap();
        assert!((c.lambda_c() - 0.03 / 2f64.sqrt()).abs() < 1e-15);
        assert!((c.mode_volume() - 4.0 * std::f64::consts::PI / (0.03 * 0.03 / 2.0)).abs() < 1e-6);
        assert!(CavityMode::new(0.0195, -0.01, 1).is_err());
        assert!(CavityMode::new(0.0195, 0.03, 3).is_err());
    }
}
