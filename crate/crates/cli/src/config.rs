//! `[section]` / `key = value` run configuration with unit-suffixed keys.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use poldqc_core::dqc::FrequencyAxis;
use poldqc_core::eigen::RelaxationConfig;
use poldqc_core::griddyn::{Axis, AxisLabel, ProductGrid};
use poldqc_core::model::{
    fit_morse_to_transitions, CavityMode, DipoleModel, MorseParams, NuclearDipole, ScfSettings, SurfaceVariant,
};
use poldqc_core::units::cm_to_hartree;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DipoleForm {
    Linear,
    Mecke,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Desk,
    Paper,
}

impl Preset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "desk" => Some(Preset::Desk),
            "paper" => Some(Preset::Paper),
            _ => None,
        }
    }

    /// (points per r axis, qc points).
    pub fn grid_points(self) -> (usize, usize) {
        match self {
            Preset::Desk => (96, 48),
            Preset::Paper => (128, 64),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub omega1_cm: f64,
    pub omega2_cm: f64,
    pub mass_au: f64,
    pub re_bohr: f64,
    pub dipole_form: DipoleForm,
    pub mu0_au: f64,
    pub slope_au: f64,
    pub gap_au: f64,
    pub transition_au: f64,

    pub omega_c_cm: f64,
    pub lambda0_au: f64,
    pub n_mol: usize,

    pub r_points: usize,
    pub r_min_bohr: f64,
    pub r_max_bohr: f64,
    pub qc_points: usize,
    pub qc_min_au: f64,
    pub qc_max_au: f64,

    pub solver: RelaxationConfig,
    pub scf: ScfSettings,

    pub gamma_cm: f64,
    pub omega2: FrequencyAxis,
    pub omega3: FrequencyAxis,
    pub threshold: f64,

    pub target_rabi_cm: f64,
    pub basis_max_vib: usize,
    pub basis_max_photon: usize,

    pub variant: SurfaceVariant,
}

/// Calibrated single-molecule dipole slope for a 60 cm⁻¹ splitting at λ0 = 0.03.
pub const DEFAULT_SLOPE_AU: f64 = 0.3845;

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            omega1_cm: 4281.0,
            omega2_cm: 4108.0,
            mass_au: 1744.59,
            re_bohr: 1.7329,
            dipole_form: DipoleForm::Linear,
            mu0_au: 0.0,
            slope_au: DEFAULT_SLOPE_AU,
            gap_au: 0.35,
            transition_au: 0.35,
            omega_c_cm: 4281.0,
            lambda0_au: 0.03,
            n_mol: 1,
            r_points: 128,
            r_min_bohr: 0.9,
            r_max_bohr: 3.6,
            qc_points: 64,
            qc_min_au: -45.0,
            qc_max_au: 45.0,
            solver: RelaxationConfig::default(),
            scf: ScfSettings::default(),
            gamma_cm: 10.0,
            omega2: FrequencyAxis::default_omega2(),
            omega3: FrequencyAxis::default_omega3(),
            threshold: 0.1,
            target_rabi_cm: 60.0,
            basis_max_vib: 2,
            basis_max_photon: 2,
            variant: SurfaceVariant::Full,
        }
    }
}

/// Keys every configuration must set.
const REQUIRED: &[(&str, &str)] = &[("cavity", "lambda0_au"), ("cavity", "n_mol")];

const KEYS: &[(&str, &[&str])] = &[
    (
        "molecule",
        &[
            "omega1_cm",
            "omega2_cm",
            "mass_au",
            "re_bohr",
            "dipole_form",
            "mu0_au",
            "slope_au",
            "electronic_gap_au",
            "electronic_dipole_au",
        ],
    ),
    ("cavity", &["omega_c_cm", "lambda0_au", "n_mol"]),
    (
        "grid",
        &["r_points", "r_min_bohr", "r_max_bohr", "qc_points", "qc_min_au", "qc_max_au"],
    ),
    (
        "solver",
        &[
            "n_states",
            "dt_imag_au",
            "krylov_order",
            "energy_tol_hartree",
            "max_steps",
            "guard",
            "leak_limit",
            "scf_tol_au",
            "scf_max_iter",
        ],
    ),
    (
        "spectrum",
        &[
            "gamma_cm",
            "omega2_start_cm",
            "omega2_step_cm",
            "omega2_points",
            "omega3_start_cm",
            "omega3_step_cm",
            "omega3_points",
            "threshold",
        ],
    ),
    ("calibration", &["target_rabi_cm"]),
    ("basis", &["max_vib", "max_photon"]),
    ("run", &["variant"]),
];

const SUFFIXES: &[&str] = &["_cm", "_au", "_bohr", "_hartree"];

fn stem(key: &str) -> &str {
    SUFFIXES.iter().find_map(|s| key.strip_suffix(s)).unwrap_or(key)
}

fn num(line: usize, key: &str, v: &str) -> Result<f64, CliError> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| CliError::parse(line, format!("{key}: expected a number, got '{v}'")))
}

fn count(line: usize, key: &str, v: &str) -> Result<usize, CliError> {
    v.parse()
        .map_err(|_| CliError::parse(line, format!("{key}: expected a non-negative integer, got '{v}'")))
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut section: Option<&'static str> = None;
        let mut seen: Vec<(&'static str, &'static str)> = Vec::new();
        let (mut o2, mut o3) = ((cfg.omega2.start, cfg.omega2.step, cfg.omega2.n), (cfg.omega3.start, cfg.omega3.step, cfg.omega3.n));
        let mut axis_lines = (0usize, 0usize);
        for (i, raw) in text.lines().enumerate() {
            let no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::parse(no, format!("malformed section header '{line}'")))?
                    .trim();
                section = Some(
                    KEYS.iter()
                        .find(|(s, _)| *s == name)
                        .map(|(s, _)| *s)
                        .ok_or_else(|| CliError::parse(no, format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::parse(no, format!("expected 'key = value', got '{line}'")))?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| CliError::parse(no, format!("key '{key}' outside any [section]")))?;
            let keys = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
            let Some(&known) = keys.iter().find(|k| **k == key) else {
                if let Some(k) = keys.iter().find(|k| stem(k) == stem(key)) {
                    return Err(CliError::parse(no, format!("unit suffix mismatch: [{sec}] expects '{k}', got '{key}'")));
                }
                return Err(CliError::parse(no, format!("unknown key '{key}' in [{sec}]")));
            };
            if seen.contains(&(sec, known)) {
                return Err(CliError::parse(no, format!("duplicate key '{key}' in [{sec}]")));
            }
            seen.push((sec, known));
            let f = |v: &str| num(no, key, v);
            let n = |v: &str| count(no, key, v);
            match (sec, known) {
                ("molecule", "omega1_cm") => cfg.omega1_cm = f(value)?,
                ("molecule", "omega2_cm") => cfg.omega2_cm = f(value)?,
                ("molecule", "mass_au") => cfg.mass_au = f(value)?,
                ("molecule", "re_bohr") => cfg.re_bohr = f(value)?,
                ("molecule", "dipole_form") => {
                    cfg.dipole_form = match value {
                        "linear" => DipoleForm::Linear,
                        "mecke" => DipoleForm::Mecke,
                        _ => return Err(CliError::parse(no, format!("dipole_form must be linear or mecke, got '{value}'"))),
                    }
                }
                ("molecule", "mu0_au") => cfg.mu0_au = f(value)?,
                ("molecule", "slope_au") => cfg.slope_au = f(value)?,
                ("molecule", "electronic_gap_au") => cfg.gap_au = f(value)?,
                ("molecule", "electronic_dipole_au") => cfg.transition_au = f(value)?,
                ("cavity", "omega_c_cm") => cfg.omega_c_cm = f(value)?,
                ("cavity", "lambda0_au") => cfg.lambda0_au = f(value)?,
                ("cavity", "n_mol") => cfg.n_mol = n(value)?,
                ("grid", "r_points") => cfg.r_points = n(value)?,
                ("grid", "r_min_bohr") => cfg.r_min_bohr = f(value)?,
                ("grid", "r_max_bohr") => cfg.r_max_bohr = f(value)?,
                ("grid", "qc_points") => cfg.qc_points = n(value)?,
                ("grid", "qc_min_au") => cfg.qc_min_au = f(value)?,
                ("grid", "qc_max_au") => cfg.qc_max_au = f(value)?,
                ("solver", "n_states") => cfg.solver.n_states = n(value)?,
                ("solver", "dt_imag_au") => cfg.solver.dt_imag = f(value)?,
                ("solver", "krylov_order") => cfg.solver.krylov_order = n(value)?,
                ("solver", "energy_tol_hartree") => cfg.solver.energy_tol = f(value)?,
                ("solver", "max_steps") => cfg.solver.max_steps = n(value)?,
                ("solver", "guard") => cfg.solver.guard = n(value)?,
                ("solver", "leak_limit") => cfg.solver.leak_limit = f(value)?,
                ("solver", "scf_tol_au") => cfg.scf.tol = f(value)?,
                ("solver", "scf_max_iter") => cfg.scf.max_iter = n(value)?,
                ("spectrum", "gamma_cm") => cfg.gamma_cm = f(value)?,
                ("spectrum", "omega2_start_cm") => o2.0 = f(value)?,
                ("spectrum", "omega2_step_cm") => o2.1 = f(value)?,
                ("spectrum", "omega2_points") => o2.2 = n(value)?,
                ("spectrum", "omega3_start_cm") => o3.0 = f(value)?,
                ("spectrum", "omega3_step_cm") => o3.1 = f(value)?,
                ("spectrum", "omega3_points") => o3.2 = n(value)?,
                ("spectrum", "threshold") => cfg.threshold = f(value)?,
                ("calibration", "target_rabi_cm") => cfg.target_rabi_cm = f(value)?,
                ("basis", "max_vib") => cfg.basis_max_vib = n(value)?,
                ("basis", "max_photon") => cfg.basis_max_photon = n(value)?,
                ("run", "variant") => {
                    cfg.variant = SurfaceVariant::parse(value)
                        .ok_or_else(|| CliError::parse(no, format!("unknown variant '{value}'")))?
                }
                _ => unreachable!("key table and match arms disagree on {sec}.{known}"),
            }
            if known.starts_with("omega2_") {
                axis_lines.0 = no;
            }
            if known.starts_with("omega3_") {
                axis_lines.1 = no;
            }
        }
        let last = text.lines().count();
        for (sec, key) in REQUIRED {
            if !seen.contains(&(sec, key)) {
                return Err(CliError::parse(last, format!("missing required key '{key}' in [{sec}]")));
            }
        }
        cfg.omega2 = FrequencyAxis::new(o2.0, o2.1, o2.2).map_err(|e| CliError::parse(axis_lines.0, e.to_string()))?;
        cfg.omega3 = FrequencyAxis::new(o3.0, o3.1, o3.2).map_err(|e| CliError::parse(axis_lines.1, e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse_str(&text)
    }

    pub fn apply_preset(&mut self, p: Preset) {
        let (nr, nq) = p.grid_points();
        self.r_points = nr;
        self.qc_points = nq;
    }

    /// Check every value against the preconditions of the module that consumes it.
    pub fn validate(&self) -> Result<(), CliError> {
        let morse = self.morse()?;
        let cav = self.cavity()?;
        self.dipole()?.validate(cav.omega_c)?;
        self.solver.validate()?;
        self.grid()?;
        if morse.turning_points(morse.level(2)).is_none() {
            return Err(CliError::Validation("Morse well too shallow for the second manifold".into()));
        }
        if !(self.gamma_cm > 0.0) {
            return Err(CliError::Validation(format!("gamma_cm must be positive, got {}", self.gamma_cm)));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(CliError::Validation(format!("threshold must lie in (0, 1), got {}", self.threshold)));
        }
        if !(self.target_rabi_cm > 0.0) {
            return Err(CliError::Validation(format!("target_rabi_cm must be positive, got {}", self.target_rabi_cm)));
        }
        if self.scf.max_iter == 0 || !(self.scf.tol > 0.0) {
            return Err(CliError::Validation("scf_tol_au and scf_max_iter must be positive".into()));
        }
        Ok(())
    }

    pub fn morse(&self) -> Result<MorseParams, CliError> {
        Ok(fit_morse_to_transitions(self.omega1_cm, self.omega2_cm, self.mass_au, self.re_bohr)?)
    }

    pub fn cavity(&self) -> Result<CavityMode, CliError> {
        Ok(CavityMode::new(cm_to_hartree(self.omega_c_cm), self.lambda0_au, self.n_mol)?)
    }

    pub fn dipole(&self) -> Result<DipoleModel, CliError> {
        let nuclear = match self.dipole_form {
            DipoleForm::Linear => NuclearDipole::Linear {
                mu0: self.mu0_au,
                slope: self.slope_au,
                re: self.re_bohr,
            },
            DipoleForm::Mecke => NuclearDipole::mecke_matching(self.mu0_au, self.slope_au, self.re_bohr)?,
        };
        Ok(DipoleModel {
            nuclear,
            gap: self.gap_au,
            transition: self.transition_au,
        })
    }

    /// Grid with `n_mol` r axes followed by the qc axis.
    pub fn grid(&self) -> Result<Arc<ProductGrid<f64>>, CliError> {
        let r = Axis::new(AxisLabel::R1, self.r_points, self.r_min_bohr, self.r_max_bohr, self.mass_au)?;
        let mut axes = vec![r.clone()];
        if self.n_mol == 2 {
            axes.push(r.relabeled(AxisLabel::R2));
        }
        axes.push(Axis::new(AxisLabel::Qc, self.qc_points, self.qc_min_au, self.qc_max_au, 1.0)?);
        Ok(Arc::new(ProductGrid::new(axes)?))
    }

    /// Canonical text form; parses back to the same configuration.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let form = match self.dipole_form {
            DipoleForm::Linear => "linear",
            DipoleForm::Mecke => "mecke",
        };
        let _ = write!(
            s,
            "[molecule]\nomega1_cm = {:?}\nomega2_cm = {:?}\nmass_au = {:?}\nre_bohr = {:?}\ndipole_form = {form}\n\
             mu0_au = {:?}\nslope_au = {:?}\nelectronic_gap_au = {:?}\nelectronic_dipole_au = {:?}\n\n",
            self.omega1_cm, self.omega2_cm, self.mass_au, self.re_bohr, self.mu0_au, self.slope_au, self.gap_au, self.transition_au
        );
        let _ = write!(
            s,
            "[cavity]\nomega_c_cm = {:?}\nlambda0_au = {:?}\nn_mol = {}\n\n",
            self.omega_c_cm, self.lambda0_au, self.n_mol
        );
        let _ = write!(
            s,
            "[grid]\nr_points = {}\nr_min_bohr = {:?}\nr_max_bohr = {:?}\nqc_points = {}\nqc_min_au = {:?}\nqc_max_au = {:?}\n\n",
            self.r_points, self.r_min_bohr, self.r_max_bohr, self.qc_points, self.qc_min_au, self.qc_max_au
        );
        let v = &self.solver;
        let _ = write!(
            s,
            "[solver]\nn_states = {}\ndt_imag_au = {:?}\nkrylov_order = {}\nenergy_tol_hartree = {:?}\nmax_steps = {}\n\
             guard = {}\nleak_limit = {:?}\nscf_tol_au = {:?}\nscf_max_iter = {}\n\n",
            v.n_states, v.dt_imag, v.krylov_order, v.energy_tol, v.max_steps, v.guard, v.leak_limit, self.scf.tol, self.scf.max_iter
        );
        let _ = write!(
            s,
            "[spectrum]\ngamma_cm = {:?}\nomega2_start_cm = {:?}\nomega2_step_cm = {:?}\nomega2_points = {}\n\
             omega3_start_cm = {:?}\nomega3_step_cm = {:?}\nomega3_points = {}\nthreshold = {:?}\n\n",
            self.gamma_cm,
            self.omega2.start,
            self.omega2.step,
            self.omega2.n,
            self.omega3.start,
            self.omega3.step,
            self.omega3.n,
            self.threshold
        );
        let _ = write!(s, "[calibration]\ntarget_rabi_cm = {:?}\n\n", self.target_rabi_cm);
        let _ = write!(s, "[basis]\nmax_vib = {}\nmax_photon = {}\n\n", self.basis_max_vib, self.basis_max_photon);
        let _ = writeln!(s, "[run]\nvariant = {}", self.variant);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[cavity]\nlambda0_au = 0.03\nn_mol = 1\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse_str(MINIMAL).unwrap();
        assert_eq!(c, RunConfig::default());
        c.validate().unwrap();
    }

    #[test]
    fn canonical_text_round_trips() {
        let mut c = RunConfig::parse_str(MINIMAL).unwrap();
        c.n_mol = 2;
        c.slope_au = 0.1 + 0.2;
        c.variant = SurfaceVariant::Etc;
        c.omega3 = FrequencyAxis::new(3990.5, 0.5, 17).unwrap();
        assert_eq!(RunConfig::parse_str(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn negative_coupling_fails_validation() {
        let c = RunConfig::parse_str("[cavity]\nlambda0_au = -0.01\nn_mol = 1\n").unwrap();
        assert!(matches!(c.validate(), Err(CliError::Validation(_))));
    }

    #[test]
    fn full_scale_parameter_set_accepted() {
        let text = "# two molecules at full scale\n[cavity]\nomega_c_cm = 4281\nlambda0_au = 0.03\nn_mol = 2\n\
                    [spectrum]\ngamma_cm = 10\n[grid]\nr_points = 128\nqc_points = 64\n";
        let c = RunConfig::parse_str(text).unwrap();
        c.validate().unwrap();
        assert_eq!(c.grid().unwrap().shape(), vec![128, 128, 64]);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let line = |text: &str| match RunConfig::parse_str(text) {
            Err(CliError::Parse { line, message }) => (line, message),
            other => panic!("expected a parse error, got {other:?}"),
        };
        let (l, m) = line("[cavity]\nlambda0_au = 0.03\nn_mol = 1\nfoo = 2\n");
        assert_eq!(l, 4);
        assert!(m.contains("unknown key"));
        let (l, m) = line("[cavity]\nomega_c_au = 0.0195\nlambda0_au = 0.03\nn_mol = 1\n");
        assert_eq!(l, 2);
        assert!(m.contains("omega_c_cm"), "{m}");
        let (l, m) = line("[cavity]\nlambda0_au = 0.03\n");
        assert_eq!(l, 2);
        assert!(m.contains("n_mol"));
        let (l, _) = line("[cavity]\nlambda0_au = 0.03\nn_mol = 1\n[grid]\nr_points = many\n");
        assert_eq!(l, 5);
        let (l, _) = line("lambda0_au = 0.03\n");
        assert_eq!(l, 1);
        let (l, m) = line("[cavity]\nlambda0_au = 0.03\nlambda0_au = 0.02\nn_mol = 1\n");
        assert_eq!(l, 3);
        assert!(m.contains("duplicate"));
        let (l, _) = line("[cavity]\nlambda0_au = 0.03\nn_mol = 1\n[spectrum]\nomega2_points = 1\n");
        assert_eq!(l, 5);
    }

    #[test]
    fn presets_set_grid_sizes() {
        let mut c = RunConfig {
            n_mol: 2,
            ..RunConfig::default()
        };
        c.apply_preset(Preset::Desk);
        assert_eq!(c.grid().unwrap().shape(), vec![96, 96, 48]);
        c.apply_preset(Preset::Paper);
        assert_eq!(c.grid().unwrap().shape(), vec![128, 128, 64]);
    }
}
