//! Uncoupled bare states |v, n⟩ and |v_s v_a, n⟩ on the product grid and projection of
//! coupled eigenstates onto them.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex;

use crate::eigen::{solve_grid_states, EigenSolution, RelaxationConfig};
use crate::error::{Error, Result};
use crate::griddyn::{hermite_function, inner_product, Axis, AxisLabel, ProductGrid, Wavefunction, BOUNDARY_LEAK_LIMIT};
use crate::model::{morse_potential, CavityMode, MorseParams};
use crate::units::hartree_to_cm;

/// Highest photon level available from [`photon_eigenfunction`].
pub const MAX_PHOTON_LEVEL: usize = 4;
/// Weight at or above which a coupled state is named after its dominant bare state.
pub const PURE_WEIGHT: f64 = 0.75;
/// Weight below which a coupled state is reported as mixed.
pub const MIXED_WEIGHT: f64 = 0.4;

/// Vibrational part of a bare label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Vibration {
    /// One molecule in level v.
    Single(usize),
    /// Two molecules: symmetric and antisymmetric quanta.
    Pair { s: usize, a: usize },
}

impl Vibration {
    pub fn quanta(self) -> usize {
        match self {
            Vibration::Single(v) => v,
            Vibration::Pair { s, a } => s + a,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BareLabel {
    pub vib: Vibration,
    /// Photon number.
    pub n: usize,
}

impl BareLabel {
    pub fn single(v: usize, n: usize) -> Self {
        BareLabel {
            vib: Vibration::Single(v),
            n,
        }
    }

    pub fn pair(s: usize, a: usize, n: usize) -> Self {
        BareLabel {
            vib: Vibration::Pair { s, a },
            n,
        }
    }

    /// Conventional name of a coupled state dominated by this bare state.
    pub fn state_name(&self) -> String {
        let n = self.n;
        match (self.vib, n) {
            (Vibration::Single(0), 0) | (Vibration::Pair { s: 0, a: 0 }, 0) => "g".into(),
            (Vibration::Single(0), n) | (Vibration::Pair { s: 0, a: 0 }, n) => format!("p({n})"),
            (Vibration::Single(1), 0) | (Vibration::Pair { s: 1, a: 0 }, 0) => "e".into(),
            (Vibration::Single(2), 0) | (Vibration::Pair { s: 2, a: 0 }, 0) => "f".into(),
            (Vibration::Pair { s: 0, a: 1 }, 0) => "d1".into(),
            (Vibration::Pair { s: 0, a: 2 }, 0) => "d2".into(),
            (Vibration::Pair { s: 0, a: 1 }, 1) => "d3".into(),
            (Vibration::Pair { s: 1, a: 1 }, 0) => "f2".into(),
            _ => self.to_string(),
        }
    }
}

impl fmt::Display for BareLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.vib {
            Vibration::Single(v) => write!(f, "|{v},{}>", self.n),
            Vibration::Pair { s, a } => write!(f, "|{s}{a},{}>", self.n),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BareState {
    pub label: BareLabel,
    pub function: Wavefunction<f64>,
    /// Sum of the 1D molecular energies and (n + ½)ωc, hartree.
    pub energy: f64,
}

/// Lowest vibrational eigenfunctions of one Morse oscillator on a 1D grid.
#[derive(Clone, Debug)]
pub struct MolecularStates {
    pub axis: Axis<f64>,
    pub energies: Vec<f64>,
    /// Real values normalized with the axis spacing.
    pub functions: Vec<Vec<f64>>,
}

/// Lowest `n_v` Morse eigenstates on `axis`, with each function positive at its outer turning point.
pub fn molecular_eigenstates_1d(morse: &MorseParams, axis: &Axis<f64>, n_v: usize) -> Result<MolecularStates> {
    morse.validate()?;
    if n_v == 0 || n_v > morse.bound_state_count() {
        return Err(Error::InvalidParameter(format!(
            "n_v = {n_v} must lie in 1..={} (bound states)",
            morse.bound_state_count()
        )));
    }
    let axis = axis.relabeled(AxisLabel::R1);
    let grid = Arc::new(ProductGrid::new(vec![axis.clone()])?);
    let v = grid.tabulate(|x| morse_potential(x[0], morse));
    let cfg = RelaxationConfig {
        n_states: n_v,
        energy_tol: 1e-12,
        ..Default::default()
    };
    let sol = solve_grid_states(grid, v, &cfg)?;
    let mut functions = Vec::with_capacity(n_v);
    for (k, wf) in sol.states.iter().enumerate() {
        let mut f = wf.real_parts();
        let outer = morse
            .turning_points(sol.energies[k])
            .map(|(_, o)| o)
            .unwrap_or(axis.max());
        let i = (((outer - axis.min()) / axis.spacing()).round().max(0.0) as usize).min(axis.n_points() - 1);
        if f[i] < 0.0 {
            f.iter_mut().for_each(|x| *x = -*x);
        }
        functions.push(f);
    }
    Ok(MolecularStates {
        axis,
        energies: sol.energies,
        functions,
    })
}

/// Harmonic photon level n of frequency `omega_c` (unit mass) normalized on `axis`.
pub fn photon_eigenfunction(n: usize, omega_c: f64, axis: &Axis<f64>) -> Result<Vec<f64>> {
    if n > MAX_PHOTON_LEVEL {
        return Err(Error::InvalidParameter(format!(
            "photon level {n} exceeds {MAX_PHOTON_LEVEL}"
        )));
    }
    if !(omega_c > 0.0) {
        return Err(Error::InvalidParameter("omega_c must be positive".into()));
    }
    let mut f: Vec<f64> = axis.coords().iter().map(|&q| hermite_function(n, q, 1.0, omega_c, 0.0)).collect();
    let norm = (f.iter().map(|x| x * x).sum::<f64>() * axis.spacing()).sqrt();
    f.iter_mut().for_each(|x| *x /= norm);
    let edge = f[0].abs().max(f[f.len() - 1].abs());
    if edge > BOUNDARY_LEAK_LIMIT {
        return Err(Error::BoundaryLeak {
            what: format!("photon level {n}"),
            amplitude: edge,
            limit: BOUNDARY_LEAK_LIMIT,
        });
    }
    Ok(f)
}

fn tensor(grid: &Arc<ProductGrid<f64>>, factors: &[&[f64]]) -> Result<Wavefunction<f64>> {
    let nd = grid.ndim();
    let values: Vec<f64> = (0..grid.total_points())
        .map(|k| {
            let idx = grid.unravel(k);
            (0..nd).map(|d| factors[d][idx[d]]).product()
        })
        .collect();
    Wavefunction::from_real(grid.clone(), &values)
}

fn combine(a: &Wavefunction<f64>, b: &Wavefunction<f64>, sign: f64) -> Result<Wavefunction<f64>> {
    let mut out = a.clone();
    out.axpy(Complex::new(sign, 0.0), b)?;
    out.scale(Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    Ok(out)
}

/// Bare product states with at most `n_v_max` vibrational quanta, at most `n_photon_max` photons
/// and at most max(n_v_max, n_photon_max) quanta in total, sorted by bare energy.
pub fn build_bare_basis(
    n_mol: usize,
    n_v_max: usize,
    n_photon_max: usize,
    grid: &Arc<ProductGrid<f64>>,
    morse: &MorseParams,
    cavity: &CavityMode,
) -> Result<Vec<BareState>> {
    if !(1..=2).contains(&n_mol) {
        return Err(Error::InvalidParameter(format!("n_mol must be 1 or 2, got {n_mol}")));
    }
    let q = grid.qc_axis().ok_or_else(|| Error::Shape("bare basis needs a qc axis".into()))?;
    if grid.n_nuclear() != n_mol {
        return Err(Error::Shape(format!(
            "grid has {} r-axes for {n_mol} molecules",
            grid.n_nuclear()
        )));
    }
    let axes = grid.axes();
    if n_mol == 2 && axes[0].relabeled(AxisLabel::R2) != axes[1] {
        return Err(Error::Shape("symmetrized pair states need identical r-axes".into()));
    }
    let total_max = n_v_max.max(n_photon_max);
    let mol = molecular_eigenstates_1d(morse, &axes[0], (n_v_max + 1).min(morse.bound_state_count()))?;
    if mol.functions.len() <= n_v_max {
        return Err(Error::InvalidParameter(format!("n_v_max = {n_v_max} exceeds the bound states")));
    }
    let photons = (0..=n_photon_max)
        .map(|n| photon_eigenfunction(n, cavity.omega_c, &axes[q]))
        .collect::<Result<Vec<_>>>()?;
    let photon_energy = |n: usize| (n as f64 + 0.5) * cavity.omega_c;

    let mut out = Vec::new();
    for n in 0..=n_photon_max {
        let chi = photons[n].as_slice();
        if n_mol == 1 {
            for v in 0..=n_v_max {
                if v + n > total_max {
                    continue;
                }
                out.push(BareState {
                    label: BareLabel::single(v, n),
                    function: tensor(grid, &[&mol.functions[v], chi])?,
                    energy: mol.energies[v] + photon_energy(n),
                });
            }
        } else {
            let local = |i: usize, j: usize| tensor(grid, &[&mol.functions[i], &mol.functions[j], chi]);
            let e = |i: usize, j: usize| mol.energies[i] + mol.energies[j] + photon_energy(n);
            for quanta in 0..=n_v_max {
                if quanta + n > total_max {
                    continue;
                }
                match quanta {
                    0 => out.push(BareState {
                        label: BareLabel::pair(0, 0, n),
                        function: local(0, 0)?,
                        energy: e(0, 0),
                    }),
                    _ => {
                        // |m,0⟩ ± |0,m⟩ carry (s, a) = (m, 0) and (0, m); mixed local excitations are products.
                        let (x, y) = (local(quanta, 0)?, local(0, quanta)?);
                        out.push(BareState {
                            label: BareLabel::pair(quanta, 0, n),
                            function: combine(&x, &y, 1.0)?,
                            energy: e(quanta, 0),
                        });
                        out.push(BareState {
                            label: BareLabel::pair(0, quanta, n),
                            function: combine(&x, &y, -1.0)?,
                            energy: e(quanta, 0),
                        });
                        for i in 1..quanta {
                            let j = quanta - i;
                            if i < j {
                                continue;
                            }
                            if i == j {
                                out.push(BareState {
                                    label: BareLabel::pair(i, j, n),
                                    function: local(i, j)?,
                                    energy: e(i, j),
                                });
                            } else {
                                let (x, y) = (local(i, j)?, local(j, i)?);
                                out.push(BareState {
                                    label: BareLabel::pair(i, j, n),
                                    function: combine(&x, &y, 1.0)?,
                                    energy: e(i, j),
                                });
                                out.push(BareState {
                                    label: BareLabel::pair(j, i, n),
                                    function: combine(&x, &y, -1.0)?,
                                    energy: e(i, j),
                                });
                            }
                        }
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then(a.label.n.cmp(&b.label.n))
            .then(a.label.cmp(&b.label))
    });
    // Degenerate bare energies come out of two separate 1D solves; treat them as ties.
    let mut sorted: Vec<BareState> = Vec::with_capacity(out.len());
    for s in out {
        let pos = sorted
            .iter()
            .position(|t| t.energy > s.energy + 1e-9 || ((t.energy - s.energy).abs() <= 1e-9 && t.label.n > s.label.n))
            .unwrap_or(sorted.len());
        sorted.insert(pos, s);
    }
    Ok(sorted)
}

/// |c_ij|² of coupled states (rows) on bare states (columns).
#[derive(Clone, Debug)]
pub struct DecompositionTable {
    pub row_labels: Vec<String>,
    /// Excitation energies of the rows, cm⁻¹.
    pub row_energies_cm: Vec<f64>,
    pub col_labels: Vec<BareLabel>,
    /// Signed real overlaps ⟨bare_j|χ_i⟩.
    pub coefficients: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    /// 1 − Σ_j |c_ij|² per row.
    pub residuals: Vec<f64>,
}

impl DecompositionTable {
    pub fn row(&self, label: &str) -> Option<usize> {
        self.row_labels.iter().position(|l| l == label)
    }

    pub fn col(&self, label: BareLabel) -> Option<usize> {
        self.col_labels.iter().position(|l| *l == label)
    }

    pub fn weight(&self, row: &str, col: BareLabel) -> Option<f64> {
        Some(self.weights[self.row(row)?][self.col(col)?])
    }

    /// Rows with no weight ≥ [`MIXED_WEIGHT`].
    pub fn mixed_rows(&self) -> Vec<usize> {
        (0..self.row_labels.len())
            .filter(|&i| self.row_labels[i] == "mixed")
            .collect()
    }

    /// Tab-separated table with four-decimal weights.
    pub fn write_tsv<W: Write>(&self, w: &mut W) -> Result<()> {
        write!(w, "state\tenergy_cm")?;
        for c in &self.col_labels {
            write!(w, "\t{c}")?;
        }
        writeln!(w, "\tresidual")?;
        for (i, label) in self.row_labels.iter().enumerate() {
            write!(w, "{label}\t{:.2}", self.row_energies_cm[i])?;
            for v in &self.weights[i] {
                write!(w, "\t{v:.4}")?;
            }
            writeln!(w, "\t{:.4}", self.residuals[i])?;
        }
        Ok(())
    }

    pub fn save_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_tsv(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

/// Project every eigenstate onto the bare basis and name the rows.
pub fn decompose(eig: &EigenSolution, basis: &[BareState]) -> Result<DecompositionTable> {
    if eig.states.is_empty() {
        return Err(Error::Shape("eigen solution carries no wavefunctions".into()));
    }
    if basis.is_empty() {
        return Err(Error::Shape("empty bare basis".into()));
    }
    let coefficients = eig
        .states
        .iter()
        .map(|chi| {
            basis
                .iter()
                .map(|b| inner_product(&b.function, chi).map(|c| c.re))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let weights: Vec<Vec<f64>> = coefficients
        .iter()
        .map(|row| row.iter().map(|c| (c * c).clamp(0.0, 1.0)).collect())
        .collect();
    let residuals = weights.iter().map(|row| 1.0 - row.iter().sum::<f64>()).collect();
    let col_labels: Vec<BareLabel> = basis.iter().map(|b| b.label).collect();
    let row_energies_cm: Vec<f64> = (0..eig.len()).map(|i| eig.excitation_cm(i)).collect();
    let row_labels = label_rows(eig, &weights, &col_labels);
    Ok(DecompositionTable {
        row_labels,
        row_energies_cm,
        col_labels,
        coefficients,
        weights,
        residuals,
    })
}

fn manifold_of(eig: &EigenSolution, i: usize) -> usize {
    let p = &eig.partition;
    if eig.partition.e_set.contains(&i) {
        1
    } else if p.f_set.contains(&i) {
        2
    } else {
        ((eig.energies[i] - eig.energies[p.g]) / p.omega_ref).round().max(0.0) as usize
    }
}

fn label_rows(eig: &EigenSolution, weights: &[Vec<f64>], cols: &[BareLabel]) -> Vec<String> {
    let n = weights.len();
    let mut labels = vec![String::new(); n];
    let mut polaritons: Vec<(usize, usize)> = Vec::new();
    for (i, row) in weights.iter().enumerate() {
        let (j, w) = row
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (j, &w)| if w > acc.1 { (j, w) } else { acc });
        if w >= PURE_WEIGHT {
            labels[i] = cols[j].state_name();
        } else if w >= MIXED_WEIGHT {
            polaritons.push((manifold_of(eig, i), i));
        } else {
            labels[i] = "mixed".into();
        }
    }
    let mut manifolds: Vec<usize> = polaritons.iter().map(|p| p.0).collect();
    manifolds.sort_unstable();
    manifolds.dedup();
    for m in manifolds {
        let mut members: Vec<usize> = polaritons.iter().filter(|p| p.0 == m).map(|p| p.1).collect();
        members.sort_by(|&a, &b| eig.energies[a].total_cmp(&eig.energies[b]));
        let count = members.len();
        for (rank, &i) in members.iter().enumerate() {
            labels[i] = match (rank, count) {
                (0, 1) => format!("P({m})"),
                (0, _) => format!("LP({m})"),
                (r, c) if r + 1 == c => format!("UP({m})"),
                (_, 3) => format!("MP({m})"),
                (r, _) => format!("MP{r}({m})"),
            };
        }
    }
    labels
}

/// Excitation energy of a bare state above the bare ground state, cm⁻¹.
pub fn bare_excitation_cm(basis: &[BareState], label: BareLabel) -> Option<f64> {
    let e0 = basis.iter().map(|b| b.energy).fold(f64::INFINITY, f64::min);
    basis.iter().find(|b| b.label == label).map(|b| hartree_to_cm(b.energy - e0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::griddyn::apply_diagonal;
    use crate::model::fit_morse_to_transitions;
    use crate::units::cm_to_hartree;

    fn morse() -> MorseParams {
        fit_morse_to_transitions(4281.0, 4108.0, 1744.59, 1.7329).unwrap()
    }

    fn qaxis() -> Axis<f64> {
        Axis::new(AxisLabel::Qc, 64, -45.0, 45.0, 1.0).unwrap()
    }

    #[test]
    fn photon_levels() {
        let w = cm_to_hartree(4281.0);
        let a = qaxis();
        let h = a.spacing();
        let q = a.coords();
        let f0 = photon_eigenfunction(0, w, &a).unwrap();
        let f1 = photon_eigenfunction(1, w, &a).unwrap();
        assert!((f0.iter().map(|x| x * x).sum::<f64>() * h - 1.0).abs() < 1e-10);
        let var = f0.iter().zip(&q).map(|(f, x)| f * f * x * x).sum::<f64>() * h;
        assert!((var - 1.0 / (2.0 * w)).abs() / var < 1e-8);
        let m01: f64 = f0.iter().zip(&f1).zip(&q).map(|((a, b), x)| a * b * x).sum::<f64>() * h;
        assert!((m01 - 1.0 / (2.0 * w).sqrt()).abs() / m01 < 1e-8);
        let g = Arc::new(ProductGrid::new(vec![a.clone()]).unwrap());
        let f2 = Wavefunction::from_real(g.clone(), &photon_eigenfunction(2, w, &a).unwrap()).unwrap();
        let h2 = crate::griddyn::GridHamiltonian::new(g.clone(), g.tabulate(|x| 0.5 * w * w * x[0] * x[0])).unwrap();
        let e = h2.expectation(&f2).unwrap();
        assert!((e - 2.5 * w).abs() / (2.5 * w) < 1e-8, "{e}");
        assert!(photon_eigenfunction(5, w, &a).is_err());
        let narrow = Axis::new(AxisLabel::Qc, 32, -10.0, 10.0, 1.0).unwrap();
        assert!(matches!(photon_eigenfunction(0, w, &narrow), Err(Error::BoundaryLeak { .. })));
    }

    #[test]
    fn morse_levels_nodes_and_phase() {
        let m = morse();
        let axis = Axis::new(AxisLabel::R1, 128, 0.9, 3.6, m.mass).unwrap();
        let st = molecular_eigenstates_1d(&m, &axis, 3).unwrap();
        for v in 0..3 {
            let de = hartree_to_cm(st.energies[v] - st.energies[0]);
            let want = hartree_to_cm(m.level(v) - m.level(0));
            assert!((de - want).abs() < 0.5, "v={v}: {de} vs {want}");
        }
        let sign_changes = |f: &[f64]| {
            let peak = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let sig: Vec<f64> = f.iter().cloned().filter(|x| x.abs() > 1e-6 * peak).collect();
            sig.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
        };
        assert_eq!(sign_changes(&st.functions[0]), 0);
        assert_eq!(sign_changes(&st.functions[1]), 1);
        let h = axis.spacing();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = st.functions[i].iter().zip(&st.functions[j]).map(|(a, b)| a * b).sum::<f64>() * h;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-8);
            }
        }
        // outermost lobe positive
        for f in &st.functions {
            let last = f.iter().rev().find(|x| x.abs() > 1e-4).unwrap();
            assert!(*last > 0.0);
        }
    }

    #[test]
    fn pair_basis_orthonormal_dark_and_additive() {
        let m = morse();
        let r = Axis::new(AxisLabel::R1, 64, 0.9, 3.6, m.mass).unwrap();
        let g = Arc::new(ProductGrid::new(vec![r.clone(), r.relabeled(AxisLabel::R2), Axis::new(AxisLabel::Qc, 32, -45.0, 45.0, 1.0).unwrap()]).unwrap());
        let cav = CavityMode::new(cm_to_hartree(4281.0), 0.03, 2).unwrap();
        let basis = build_bare_basis(2, 2, 2, &g, &m, &cav).unwrap();
        assert_eq!(basis.len(), 10);
        for i in 0..basis.len() {
            for j in 0..=i {
                let s = inner_product(&basis[i].function, &basis[j].function).unwrap().re;
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-8, "{} {}", basis[i].label, basis[j].label);
            }
        }
        let dip = g.tabulate(|x| 0.38 * ((x[0] - 1.7329) + (x[1] - 1.7329)));
        let find = |l: BareLabel| basis.iter().find(|b| b.label == l).unwrap();
        for n in 0..2 {
            let mu = apply_diagonal(&find(BareLabel::pair(0, 0, n)).function, &dip).unwrap();
            let dark = inner_product(&find(BareLabel::pair(0, 1, n)).function, &mu).unwrap().re;
            let bright = inner_product(&find(BareLabel::pair(1, 0, n)).function, &mu).unwrap().re;
            assert!(dark.abs() < 1e-8 && bright.abs() > 1e-3);
        }
        let e11 = bare_excitation_cm(&basis, BareLabel::pair(1, 1, 0)).unwrap();
        let e10 = bare_excitation_cm(&basis, BareLabel::pair(1, 0, 0)).unwrap();
        assert!((e11 - 2.0 * e10).abs() < 1.0);
        assert!((e10 - 4281.0).abs() < 0.5);
    }

    #[test]
    fn names_follow_convention() {
        assert_eq!(BareLabel::pair(0, 1, 0).state_name(), "d1");
        assert_eq!(BareLabel::pair(0, 1, 1).state_name(), "d3");
        assert_eq!(BareLabel::single(0, 2).state_name(), "p(2)");
        assert_eq!(BareLabel::single(1, 1).state_name(), "|1,1>");
        assert_eq!(BareLabel::pair(1, 0, 1).to_string(), "|10,1>");
    }
}
