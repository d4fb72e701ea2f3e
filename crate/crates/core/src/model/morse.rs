use crate::error::{Error, Result};
use crate::units::{cm_to_hartree, hartree_to_cm};

/// Morse oscillator V(r) = D (1 - exp(-a (r - re)))².
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MorseParams {
    /// Well depth, hartree.
    pub d: f64,
    /// Range parameter, bohr⁻¹.
    pub a: f64,
    /// Equilibrium bond length, bohr.
    pub re: f64,
    /// Reduced mass, electron masses.
    pub mass: f64,
}

impl MorseParams {
    pub fn new(d: f64, a: f64, re: f64, mass: f64) -> Result<Self> {
        let p = MorseParams { d, a, re, mass };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("D", self.d), ("a", self.a), ("re", self.re), ("mass", self.mass)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("Morse {name} must be positive, got {v}")));
            }
        }
        let n = self.bound_state_count();
        if n < 5 {
            return Err(Error::InvalidParameter(format!(
                "Morse well supports only {n} bound states (need at least 5)"
            )));
        }
        Ok(())
    }

    /// Harmonic frequency ωe in hartree.
    pub fn omega_e(&self) -> f64 {
        self.a * (2.0 * self.d / self.mass).sqrt()
    }

    /// Anharmonicity constant ωe·xe in hartree.
    pub fn omega_e_xe(&self) -> f64 {
        self.a * self.a / (2.0 * self.mass)
    }

    pub fn bound_state_count(&self) -> usize {
        let x = (2.0 * self.mass * self.d).sqrt() / self.a - 0.5;
        if x > 0.0 {
            x.floor() as usize
        } else {
            0
        }
    }

    /// Analytic level E_v measured from the bottom of the well, hartree.
    pub fn level(&self, v: usize) -> f64 {
        let x = v as f64 + 0.5;
        self.omega_e() * x - self.omega_e_xe() * x * x
    }

    /// Analytic transition E_{v+1} − E_v in cm⁻¹.
    pub fn transition_cm(&self, v: usize) -> f64 {
        hartree_to_cm(self.level(v + 1) - self.level(v))
    }

    /// Classical turning points (inner, outer) at energy `e` (hartree, below D).
    pub fn turning_points(&self, e: f64) -> Option<(f64, f64)> {
        if !(e > 0.0 && e < self.d) {
            return None;
        }
        let s = (e / self.d).sqrt();
        // exp(-a x) = 1 ∓ s
        let inner = self.re - (1.0 + s).ln() / self.a;
        let outer = self.re - (1.0 - s).ln() / self.a;
        Some((inner, outer))
    }
}

pub fn morse_potential(r: f64, p: &MorseParams) -> f64 {
    let y = 1.0 - (-p.a * (r - p.re)).exp();
    p.d * y * y
}

/// Morse parameters reproducing the fundamental `omega1_cm` and first hot band `omega2_cm` exactly.
pub fn fit_morse_to_transitions(omega1_cm: f64, omega2_cm: f64, mass: f64, re: f64) -> Result<MorseParams> {
    let wexe_cm = 0.5 * (omega1_cm - omega2_cm);
    if !(wexe_cm > 0.0) || !(omega2_cm > 0.0) {
        return Err(Error::Anharmonicity(omega1_cm - omega2_cm));
    }
    let we = cm_to_hartree(omega1_cm + 2.0 * wexe_cm);
    let wexe = cm_to_hartree(wexe_cm);
    let d = we * we / (4.0 * wexe);
    let a = (2.0 * mass * wexe).sqrt();
    MorseParams::new(d, a, re, mass)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MASS: f64 = 1744.59;

    #[test]
    fn hf_fit_constants() {
        let p = fit_morse_to_transitions(4281.0, 4108.0, MASS, 1.7329).unwrap();
        assert!((hartree_to_cm(p.omega_e()) - 4454.0).abs() < 1e-9);
        assert!((hartree_to_cm(p.omega_e_xe()) - 86.5).abs() < 1e-9);
        assert!((p.transition_cm(0) - 4281.0).abs() < 1e-9);
        assert!((p.transition_cm(1) - 4108.0).abs() < 1e-9);
        assert!((p.d - 0.2613).abs() < 5e-4, "{}", p.d);
        assert!((p.a - 1.173).abs() < 5e-4, "{}", p.a);
        assert!(p.bound_state_count() >= 20);
    }

    #[test]
    fn harmonic_limit_rejected() {
        assert!(matches!(
            fit_morse_to_transitions(4281.0, 4281.0, MASS, 1.7329),
            Err(Error::Anharmonicity(_))
        ));
        assert!(fit_morse_to_transitions(4000.0, 4100.0, MASS, 1.7329).is_err());
    }

    #[test]
    fn potential_landmarks() {
        let p = fit_morse_to_transitions(4281.0, 4108.0, MASS, 1.7329).unwrap();
        assert_eq!(morse_potential(p.re, &p), 0.0);
        let r = p.re + std::f64::consts::LN_2 / p.a;
        assert!((morse_potential(r, &p) - p.d / 4.0).abs() < 1e-15);
        assert!((morse_potential(1e3, &p) - p.d).abs() < 1e-12);
    }

    #[test]
    fn turning_points_bracket_the_well() {
        let p = fit_morse_to_transitions(4281.0, 4108.0, MASS, 1.7329).unwrap();
        let e = p.level(1);
        let (lo, hi) = p.turning_points(e).unwrap();
        assert!(lo < p.re && hi > p.re);
        assert!((morse_potential(lo, &p) - e).abs() < 1e-12);
        assert!((morse_potential(hi, &p) - e).abs() < 1e-12);
    }

    #[test]
    fn grid_levels_match_analytic() {
        use crate::eigen::{solve_grid_states, RelaxationConfig};
        use crate::griddyn::{Axis, AxisLabel, ProductGrid};
        use std::sync::Arc;
        let p = fit_morse_to_transitions(4281.0, 4108.0, MASS, 1.7329).unwrap();
        let g = Arc::new(ProductGrid::new(vec![Axis::new(AxisLabel::R1, 192, 0.9, 4.8, MASS).unwrap()]).unwrap());
        let v = g.tabulate(|x| morse_potential(x[0], &p));
        // Fourier-grid states keep ~1e-6 algebraic tails at the steep inner wall from v = 3 on.
        let cfg = RelaxationConfig {
            n_states: 5,
            energy_tol: 1e-12,
            leak_limit: 1e-5,
            ..Default::default()
        };
        let sol = solve_grid_states(g, v, &cfg).unwrap();
        for (k, e) in sol.energies.iter().enumerate() {
            assert!((hartree_to_cm(e - p.level(k))).abs() < 0.5, "v={k}");
        }
    }
}
