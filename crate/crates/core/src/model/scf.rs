use std::fmt;

use super::{morse_potential, CavityMode, DipoleModel, MorseParams};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SurfaceVariant {
    FieldFree,
    Linear,
    Full,
    Etc,
}

impl SurfaceVariant {
    pub const ALL: [SurfaceVariant; 4] = [
        SurfaceVariant::FieldFree,
        SurfaceVariant::Linear,
        SurfaceVariant::Full,
        SurfaceVariant::Etc,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SurfaceVariant::FieldFree => "free",
            SurfaceVariant::Linear => "linear",
            SurfaceVariant::Full => "full",
            SurfaceVariant::Etc => "etc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "free" | "fieldfree" | "field-free" => Some(SurfaceVariant::FieldFree),
            "linear" => Some(SurfaceVariant::Linear),
            "full" => Some(SurfaceVariant::Full),
            "etc" => Some(SurfaceVariant::Etc),
            _ => None,
        }
    }
}

impl fmt::Display for SurfaceVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScfSettings {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for ScfSettings {
    fn default() -> Self {
        ScfSettings {
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Converged mean-field electronic state at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScfState {
    /// Two-level mixing angle θ_i per molecule: |ψ_i⟩ = cos θ|0⟩ + sin θ|1⟩.
    pub angles: Vec<f64>,
    /// ⟨μ̂_i⟩ per molecule.
    pub dipoles: Vec<f64>,
    /// Electronic plus coupling energy, without the ½ωc²qc² photon term.
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
    /// Energy after each sweep, starting with the field-free guess.
    pub history: Vec<f64>,
}

struct Terms<'a> {
    v_sum: f64,
    mu_n: &'a [f64],
    d: f64,
    gap: f64,
    field: f64,
    lam: f64,
}

impl Terms<'_> {
    /// Mean-field energy for mixing angles `th`.
    fn energy(&self, variant: SurfaceVariant, th: &[f64]) -> f64 {
        let n = self.mu_n.len();
        let mut mu = [0.0; 2];
        let mut e = self.v_sum;
        for i in 0..n {
            let s = (2.0 * th[i]).sin();
            let p = 0.5 * (1.0 - (2.0 * th[i]).cos());
            mu[i] = self.mu_n[i] + self.d * s;
            e += self.gap * p + self.field * mu[i];
            if variant != SurfaceVariant::Linear {
                let mn = self.mu_n[i];
                e += 0.5 * self.lam * self.lam * (mn * mn + 2.0 * mn * self.d * s + self.d * self.d);
            }
        }
        if variant != SurfaceVariant::Linear && n == 2 {
            e += self.lam * self.lam * mu[0] * mu[1];
        }
        e
    }
}

/// Two-level mean-field electronic ground state in the cavity field at (r, qc).
pub fn scf_electronic_ground(
    r: &[f64],
    qc: f64,
    morse: &MorseParams,
    cav: &CavityMode,
    dip: &DipoleModel,
    variant: SurfaceVariant,
    settings: ScfSettings,
) -> Result<ScfState> {
    if r.is_empty() || r.len() > 2 || r.len() != cav.n_mol {
        return Err(Error::Shape(format!("{} bond lengths for n_mol = {}", r.len(), cav.n_mol)));
    }
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidParameter("SCF tolerance must be positive".into()));
    }
    if variant == SurfaceVariant::FieldFree {
        return Err(Error::InvalidParameter("the field-free variant has no electronic SCF".into()));
    }
    let n = r.len();
    let mut mu_n = [0.0; 2];
    for (m, &ri) in mu_n.iter_mut().zip(r) {
        *m = dip.nuclear.value(ri);
    }
    let lam = cav.lambda_c();
    let terms = Terms {
        v_sum: r.iter().map(|&ri| morse_potential(ri, morse)).sum(),
        mu_n: &mu_n[..n],
        d: dip.transition,
        gap: dip.gap,
        field: -cav.omega_c * qc * lam,
        lam,
    };
    let mut theta = vec![0.0; n];
    let mut mu: Vec<f64> = mu_n[..n].to_vec();
    let e0 = terms.energy(variant, &theta);
    let mut history = vec![e0];

    if variant == SurfaceVariant::Etc {
        return Ok(ScfState {
            angles: theta,
            dipoles: mu,
            energy: e0,
            iterations: 0,
            residual: 0.0,
            history,
        });
    }

    let mut damped = false;
    let mut last_residual = f64::INFINITY;
    for it in 1..=settings.max_iter {
        let prev = mu.clone();
        for i in 0..n {
            let mut f = terms.field;
            if variant == SurfaceVariant::Full {
                let others: f64 = (0..n).filter(|&j| j != i).map(|j| mu[j]).sum();
                f += lam * lam * (mu_n[i] + others);
            }
            // Minimize gap·p + (d F)·s over θ exactly.
            let h = terms.d * f;
            let target = 0.5 * (-2.0 * h).atan2(terms.gap);
            theta[i] = if damped { 0.5 * (theta[i] + target) } else { target };
            mu[i] = mu_n[i] + terms.d * (2.0 * theta[i]).sin();
        }
        let residual = mu.iter().zip(&prev).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        history.push(terms.energy(variant, &theta));
        if residual < settings.tol {
            return Ok(ScfState {
                angles: theta,
                dipoles: mu,
                energy: *history.last().unwrap_or(&e0),
                iterations: it,
                residual,
                history,
            });
        }
        if residual > last_residual {
            damped = true;
        }
        last_residual = residual;
    }
    Err(Error::NonConvergence {
        stage: "scf",
        iterations: settings.max_iter,
        residual: last_residual,
        context: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fit_morse_to_transitions;
    use crate::units::cm_to_hartree;

    fn setup(lambda0: f64, n_mol: usize, d: f64) -> (MorseParams, CavityMode, DipoleModel) {
        let m = fit_morse_to_transitions(4281.0, 4108.0, 1744.59, 1.7329).unwrap();
        let c = CavityMode::new(cm_to_hartree(4281.0), lambda0, n_mol).unwrap();
        let dip = DipoleModel::linear(0.7, 0.38, 1.7329, 0.35, d);
        (m, c, dip)
    }

    #[test]
    fn decoupled_limit_all_variants_agree() {
        let (m, c, dip) = setup(0.0, 2, 0.35);
        let s = ScfSettings::default();
        let r = [1.6, 1.9];
        let full = scf_electronic_ground(&r, 12.0, &m, &c, &dip, SurfaceVariant::Full, s).unwrap();
        let lin = scf_electronic_ground(&r, 12.0, &m, &c, &dip, SurfaceVariant::Linear, s).unwrap();
        let etc = scf_electronic_ground(&r, 12.0, &m, &c, &dip, SurfaceVariant::Etc, s).unwrap();
        assert!((full.energy - lin.energy).abs() < 1e-12);
        assert!((full.energy - etc.energy).abs() < 1e-12);
        for i in 0..2 {
            assert!((full.dipoles[i] - dip.nuclear.value(r[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn rigid_dipole_closed_form() {
        let (m, c, dip) = setup(0.03, 2, 0.0);
        let r = [1.5, 2.1];
        let qc = -7.5;
        let st = scf_electronic_ground(&r, qc, &m, &c, &dip, SurfaceVariant::Full, ScfSettings::default()).unwrap();
        let lam = c.lambda_c();
        let mu: Vec<f64> = r.iter().map(|&x| dip.nuclear.value(x)).collect();
        let total: f64 = mu.iter().sum();
        let want = morse_potential(r[0], &m) + morse_potential(r[1], &m) - c.omega_c * qc * lam * total
            + 0.5 * lam * lam * total * total;
        assert_eq!(st.iterations, 1);
        assert!((st.energy - want).abs() < 1e-14, "{} vs {want}", st.energy);
    }

    #[test]
    fn identical_molecules_share_dipole() {
        let (m, c, dip) = setup(0.03, 2, 0.35);
        let st =
            scf_electronic_ground(&[1.8, 1.8], 20.0, &m, &c, &dip, SurfaceVariant::Full, ScfSettings::default())
                .unwrap();
        assert!((st.dipoles[0] - st.dipoles[1]).abs() < 1e-12);
    }

    #[test]
    fn full_bounded_by_etc_and_monotone() {
        let (m, c, dip) = setup(0.05, 2, 0.35);
        for &(r1, r2, q) in &[(1.2, 2.5, 40.0), (1.7, 1.7, -30.0), (3.0, 1.0, 0.0)] {
            let s = ScfSettings::default();
            let full = scf_electronic_ground(&[r1, r2], q, &m, &c, &dip, SurfaceVariant::Full, s).unwrap();
            let etc = scf_electronic_ground(&[r1, r2], q, &m, &c, &dip, SurfaceVariant::Etc, s).unwrap();
            assert!(full.energy <= etc.energy + 1e-15);
            for w in full.history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12);
            }
        }
    }

    #[test]
    fn nonconvergence_is_reported() {
        let (m, c, dip) = setup(0.05, 2, 0.35);
        let s = ScfSettings { tol: 1e-300, max_iter: 3 };
        let err = scf_electronic_ground(&[1.5, 2.0], 30.0, &m, &c, &dip, SurfaceVariant::Full, s).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { stage: "scf", .. }));
    }
}
