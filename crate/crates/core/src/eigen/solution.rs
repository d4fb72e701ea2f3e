use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use super::relax::{solve_grid_states, RelaxationConfig};
use crate::error::{Error, Result};
use crate::griddyn::{apply_diagonal, inner_product, ProductGrid, Wavefunction};
use crate::model::{format_axis, parse_axis, SurfaceSet, SurfaceVariant};
use crate::units::hartree_to_cm;

/// Energy window (in units of the reference frequency) of the single-excitation manifold.
pub const E_WINDOW: (f64, f64) = (0.5, 1.5);
/// Energy window of the double-excitation manifold.
pub const F_WINDOW: (f64, f64) = (1.5, 2.5);
/// Energies closer than this (hartree) count as degenerate when ordering states.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Ground / single / double excitation classification of eigenstates.
#[derive(Clone, Debug, PartialEq)]
pub struct ManifoldPartition {
    pub g: usize,
    pub e_set: Vec<usize>,
    pub f_set: Vec<usize>,
    /// Reference frequency, hartree.
    pub omega_ref: f64,
    /// States outside both windows (excluding g).
    pub unclassified: Vec<usize>,
}

pub fn partition_manifolds(energies: &[f64], omega_ref: f64) -> Result<ManifoldPartition> {
    if !(omega_ref > 0.0) || !omega_ref.is_finite() {
        return Err(Error::Partition(format!("reference frequency must be positive, got {omega_ref}")));
    }
    if energies.is_empty() {
        return Err(Error::Partition("no energies".into()));
    }
    let g = (0..energies.len())
        .min_by(|&a, &b| energies[a].total_cmp(&energies[b]))
        .unwrap_or(0);
    let e0 = energies[g];
    let (mut e_set, mut f_set, mut unclassified) = (Vec::new(), Vec::new(), Vec::new());
    for (i, &e) in energies.iter().enumerate() {
        if i == g {
            continue;
        }
        let x = (e - e0) / omega_ref;
        if x > E_WINDOW.0 && x < E_WINDOW.1 {
            e_set.push(i);
        } else if x > F_WINDOW.0 && x < F_WINDOW.1 {
            f_set.push(i);
        } else {
            unclassified.push(i);
        }
    }
    if e_set.is_empty() || f_set.is_empty() {
        return Err(Error::Partition(format!(
            "empty manifold (|e| = {}, |f| = {}) for omega_ref = {:.3} cm^-1",
            e_set.len(),
            f_set.len(),
            hartree_to_cm(omega_ref)
        )));
    }
    Ok(ManifoldPartition {
        g,
        e_set,
        f_set,
        omega_ref,
        unclassified,
    })
}

/// Dense symmetric transition-dipole matrix μ_ij = ⟨χ_i|μ|χ_j⟩.
pub fn transition_dipoles(states: &[Wavefunction<f64>], dipole: &[f64]) -> Result<Vec<Vec<f64>>> {
    Ok(transition_dipoles_with_residue(states, dipole)?.0)
}

/// Dipole matrix together with the largest imaginary part encountered.
pub fn transition_dipoles_with_residue(states: &[Wavefunction<f64>], dipole: &[f64]) -> Result<(Vec<Vec<f64>>, f64)> {
    let n = states.len();
    let mut m = vec![vec![0.0; n]; n];
    let mut imag: f64 = 0.0;
    for j in 0..n {
        let mu_j = apply_diagonal(&states[j], dipole)?;
        for i in 0..=j {
            let c = inner_product(&states[i], &mu_j)?;
            imag = imag.max(c.im.abs());
            m[i][j] = c.re;
            m[j][i] = c.re;
        }
    }
    Ok((m, imag))
}

/// Coupled eigenstates with their dipole matrix and manifold partition.
#[derive(Clone, Debug)]
pub struct EigenSolution {
    pub energies: Vec<f64>,
    /// Grid-normalized states; empty when loaded without a wavefunction sidecar.
    pub states: Vec<Wavefunction<f64>>,
    pub dipoles: Vec<Vec<f64>>,
    pub partition: ManifoldPartition,
    pub grid: Option<Arc<ProductGrid<f64>>>,
    pub metadata: BTreeMap<String, String>,
}

impl EigenSolution {
    /// Assemble from energies and dipoles (states optional), partitioning with `omega_ref`.
    pub fn from_parts(
        energies: Vec<f64>,
        states: Vec<Wavefunction<f64>>,
        dipoles: Vec<Vec<f64>>,
        omega_ref: f64,
    ) -> Result<Self> {
        let n = energies.len();
        if dipoles.len() != n || dipoles.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!("dipole matrix must be {n}x{n}")));
        }
        if !states.is_empty() && states.len() != n {
            return Err(Error::Shape(format!("{} states for {n} energies", states.len())));
        }
        let partition = partition_manifolds(&energies, omega_ref)?;
        let grid = states.first().map(|s| s.grid().clone());
        Ok(EigenSolution {
            energies,
            states,
            dipoles,
            partition,
            grid,
            metadata: BTreeMap::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Excitation energy E_i − E_g in cm⁻¹.
    pub fn excitation_cm(&self, i: usize) -> f64 {
        hartree_to_cm(self.energies[i] - self.energies[self.partition.g])
    }

    /// Spread (highest − lowest) of a manifold in cm⁻¹; zero for fewer than two states.
    pub fn manifold_span_cm(&self, set: &[usize]) -> f64 {
        let (lo, hi) = set.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(self.energies[i]), hi.max(self.energies[i]))
        });
        if set.len() < 2 {
            0.0
        } else {
            hartree_to_cm(hi - lo)
        }
    }

    /// UP(1) − LP(1) in cm⁻¹.
    pub fn rabi_splitting_cm(&self) -> f64 {
        self.manifold_span_cm(&self.partition.e_set)
    }

    pub fn max_abs_dipole(&self) -> f64 {
        self.dipoles.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Orthogonal matrix whose first row is u/|u|; the remaining rows span u⊥.
fn bright_rotation(u: &[f64]) -> Vec<Vec<f64>> {
    let m = u.len();
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut h: Vec<Vec<f64>> = (0..m).map(|i| (0..m).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    if norm == 0.0 {
        return h;
    }
    let sign = if u[0] >= 0.0 { 1.0 } else { -1.0 };
    let mut v = u.to_vec();
    v[0] += sign * norm;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    for i in 0..m {
        for j in 0..m {
            h[i][j] -= 2.0 * v[i] * v[j] / vv;
        }
    }
    // Householder sends u to −sign·|u|·e1; flip the first row so it reads +u/|u|.
    h[0].iter_mut().for_each(|x| *x *= -sign);
    h
}

/// Runs of excited states whose energies agree within [`DEGENERACY_TOL`].
fn degenerate_runs(energies: &[f64]) -> Vec<std::ops::Range<usize>> {
    let n = energies.len();
    let mut runs = Vec::new();
    let mut start = 1;
    while start < n {
        let mut end = start + 1;
        while end < n && energies[end] - energies[end - 1] < DEGENERACY_TOL {
            end += 1;
        }
        let touches_ground = energies[start] - energies[start - 1] < DEGENERACY_TOL;
        if end - start > 1 && !touches_ground {
            runs.push(start..end);
        }
        start = end;
    }
    runs
}

fn combine(rows: &[Vec<f64>], basis: &[Wavefunction<f64>]) -> Result<Vec<Wavefunction<f64>>> {
    rows.iter()
        .map(|row| {
            let mut psi = Wavefunction::zeros(basis[0].grid().clone());
            for (c, phi) in row.iter().zip(basis) {
                psi.axpy(Complex::new(*c, 0.0), phi)?;
            }
            psi.fix_phase();
            Ok(psi)
        })
        .collect()
}

/// Fix the basis inside each degenerate run: the first state carries all of μ_g· and the
/// remaining dark states diagonalize qc², ascending.
fn resolve_degenerate(energies: &[f64], states: &mut [Wavefunction<f64>], dipoles: &[Vec<f64>]) -> Result<bool> {
    let runs = degenerate_runs(energies);
    let scale = dipoles[0].iter().skip(1).fold(0.0f64, |m, v| m.max(v.abs()));
    for run in &runs {
        let u: Vec<f64> = run.clone().map(|i| dipoles[0][i]).collect();
        let bright = u.iter().map(|x| x * x).sum::<f64>().sqrt() > 1e-8 * scale;
        let first_dark = if bright {
            let rotated = combine(&bright_rotation(&u), &states[run.clone()])?;
            states[run.clone()].clone_from_slice(&rotated);
            run.start + 1
        } else {
            run.start
        };
        let dark = first_dark..run.end;
        let grid = states[run.start].grid().clone();
        let Some(qi) = grid.qc_axis() else { continue };
        if dark.len() < 2 {
            continue;
        }
        let q2 = grid.tabulate(|x| x[qi] * x[qi]);
        let m = dark.len();
        let mut mat = DMatrix::zeros(m, m);
        for i in 0..m {
            let qpsi = apply_diagonal(&states[dark.start + i], &q2)?;
            for j in 0..m {
                mat[(j, i)] = inner_product(&states[dark.start + j], &qpsi)?.re;
            }
        }
        let mat = (&mat + mat.transpose()) * 0.5;
        let eig = SymmetricEigen::new(mat);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let rows: Vec<Vec<f64>> = order.iter().map(|&k| eig.eigenvectors.column(k).iter().copied().collect()).collect();
        let rotated = combine(&rows, &states[dark.clone()])?;
        states[dark].clone_from_slice(&rotated);
    }
    Ok(!runs.is_empty())
}

/// Relax the lowest eigenstates of a surface set and assemble dipoles and partition.
pub fn relax_eigenstates(s: &SurfaceSet, cfg: &RelaxationConfig) -> Result<EigenSolution> {
    let gs = solve_grid_states(s.grid().clone(), s.potential().to_vec(), cfg)?;
    let energies = gs.energies;
    let mut states = gs.states;
    let (mut dipoles, mut imag) = transition_dipoles_with_residue(&states, s.dipole())?;
    if resolve_degenerate(&energies, &mut states, &dipoles)? {
        (dipoles, imag) = transition_dipoles_with_residue(&states, s.dipole())?;
    }
    let omega_ref = match (s.variant(), s.omega_c()) {
        (SurfaceVariant::FieldFree, _) | (_, None) => {
            if energies.len() < 2 {
                return Err(Error::Partition("need at least two states for a field-free reference".into()));
            }
            energies[1] - energies[0]
        }
        (_, Some(w)) => w,
    };
    let mut sol = EigenSolution::from_parts(energies, states, dipoles, omega_ref)?;
    let mut meta = s.metadata().clone();
    meta.insert("variant".into(), s.variant().to_string());
    meta.insert("sweeps".into(), gs.sweeps.to_string());
    meta.insert("dipole_imag_residue".into(), format!("{imag:e}"));
    meta.insert("omega_ref_hartree".into(), format!("{omega_ref:?}"));
    sol.metadata = meta;
    Ok(sol)
}

const MAGIC: &str = "#POLDQC-EIGEN";
const WF_MAGIC: &str = "POLDQC-WF";
const VERSION: &str = "v1";
const WF_HEADER_LEN: usize = 64;

fn join(v: &[usize]) -> String {
    v.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

pub fn write_eigen_solution<W: Write>(sol: &EigenSolution, w: &mut W) -> Result<()> {
    writeln!(w, "{MAGIC} {VERSION}")?;
    let mut meta = sol.metadata.clone();
    meta.insert("omega_ref_hartree".into(), format!("{:?}", sol.partition.omega_ref));
    meta.insert("n_states".into(), sol.len().to_string());
    for (k, v) in &meta {
        writeln!(w, "#{k}={v}")?;
    }
    if let Some(g) = &sol.grid {
        for a in g.axes() {
            writeln!(w, "{}", format_axis(a))?;
        }
    }
    writeln!(w, "#energies_hartree")?;
    for e in &sol.energies {
        writeln!(w, "{e:.16e}")?;
    }
    writeln!(w, "#dipoles_au")?;
    for row in &sol.dipoles {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    let p = &sol.partition;
    writeln!(w, "#partition g={} e={} f={}", p.g, join(&p.e_set), join(&p.f_set))?;
    Ok(())
}

pub fn save_eigen_solution(sol: &EigenSolution, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_eigen_solution(sol, &mut w)?;
    w.flush()?;
    Ok(())
}

fn parse_list(no: usize, s: &str) -> Result<Vec<usize>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| t.trim().parse().map_err(|_| Error::parse(no, format!("bad index '{t}'"))))
        .collect()
}

pub fn read_eigen_solution<R: BufRead>(r: R) -> Result<EigenSolution> {
    #[derive(PartialEq)]
    enum Block {
        Header,
        Energies,
        Dipoles,
        Done,
    }
    let mut block = Block::Header;
    let mut meta = BTreeMap::new();
    let mut axes = Vec::new();
    let mut energies = Vec::new();
    let mut dipoles: Vec<Vec<f64>> = Vec::new();
    let mut partition: Option<(usize, Vec<usize>, Vec<usize>)> = None;
    let mut last = 0;
    for (i, line) in r.lines().enumerate() {
        let no = i + 1;
        last = no;
        let line = line?;
        if no == 1 {
            let mut h = line.split_whitespace();
            if h.next() != Some(MAGIC) {
                return Err(Error::parse(no, "missing #POLDQC-EIGEN header"));
            }
            if h.next() != Some(VERSION) {
                return Err(Error::parse(no, "unsupported eigen file version"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if let Some(body) = line.strip_prefix('#') {
            if body == "energies_hartree" {
                block = Block::Energies;
            } else if body == "dipoles_au" {
                block = Block::Dipoles;
            } else if let Some(rest) = body.strip_prefix("partition ") {
                let mut g = None;
                let (mut e, mut f) = (None, None);
                for tok in rest.split_whitespace() {
                    match tok.split_once('=') {
                        Some(("g", v)) => g = Some(v.parse().map_err(|_| Error::parse(no, "bad g index"))?),
                        Some(("e", v)) => e = Some(parse_list(no, v)?),
                        Some(("f", v)) => f = Some(parse_list(no, v)?),
                        _ => return Err(Error::parse(no, format!("bad partition token '{tok}'"))),
                    }
                }
                match (g, e, f) {
                    (Some(g), Some(e), Some(f)) => partition = Some((g, e, f)),
                    _ => return Err(Error::parse(no, "partition needs g=, e= and f=")),
                }
                block = Block::Done;
            } else if let Some(rest) = body.strip_prefix("axis ") {
                if block != Block::Header {
                    return Err(Error::parse(no, "axis lines must precede the data blocks"));
                }
                axes.push(parse_axis(no, rest)?);
            } else if let Some((k, v)) = body.split_once('=') {
                if block != Block::Header {
                    return Err(Error::parse(no, "metadata must precede the data blocks"));
                }
                meta.insert(k.to_string(), v.to_string());
            } else {
                return Err(Error::parse(no, format!("unknown header '{line}'")));
            }
            continue;
        }
        let nums = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::parse(no, format!("bad number '{t}'"))))
            .collect::<Result<Vec<_>>>()?;
        match block {
            Block::Energies => {
                if nums.len() != 1 {
                    return Err(Error::parse(no, "one energy per line expected"));
                }
                energies.push(nums[0]);
            }
            Block::Dipoles => dipoles.push(nums),
            _ => return Err(Error::parse(no, "data outside a block")),
        }
    }
    let n = energies.len();
    if dipoles.len() != n || dipoles.iter().any(|r| r.len() != n) {
        return Err(Error::parse(last, format!("dipole block must be {n}x{n}")));
    }
    let (g, e_set, f_set) = partition.ok_or_else(|| Error::parse(last, "missing #partition line"))?;
    let omega_ref: f64 = meta
        .get("omega_ref_hartree")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::parse(last, "missing omega_ref_hartree"))?;
    let in_range = |v: &[usize]| v.iter().all(|&i| i < n);
    if g >= n || !in_range(&e_set) || !in_range(&f_set) {
        return Err(Error::parse(last, "partition index out of range"));
    }
    let unclassified = (0..n).filter(|i| *i != g && !e_set.contains(i) && !f_set.contains(i)).collect();
    let grid = if axes.is_empty() {
        None
    } else {
        Some(Arc::new(ProductGrid::new(axes).map_err(|e| Error::parse(last, e.to_string()))?))
    };
    Ok(EigenSolution {
        energies,
        states: Vec::new(),
        dipoles,
        partition: ManifoldPartition {
            g,
            e_set,
            f_set,
            omega_ref,
            unclassified,
        },
        grid,
        metadata: meta,
    })
}

pub fn load_eigen_solution(path: impl AsRef<Path>) -> Result<EigenSolution> {
    read_eigen_solution(BufReader::new(std::fs::File::open(path)?))
}

/// Raw little-endian real parts of all states after a 64-byte text header.
pub fn write_wavefunctions<W: Write>(states: &[Wavefunction<f64>], w: &mut W) -> Result<()> {
    let total = states.first().map(|s| s.amplitudes().len()).unwrap_or(0);
    let mut header = format!("{WF_MAGIC} {VERSION} {} {total}", states.len()).into_bytes();
    if header.len() >= WF_HEADER_LEN {
        return Err(Error::Shape("wavefunction header too long".into()));
    }
    header.resize(WF_HEADER_LEN - 1, b' ');
    header.push(b'\n');
    w.write_all(&header)?;
    for s in states {
        if s.amplitudes().len() != total {
            return Err(Error::Shape("states of different sizes".into()));
        }
        for z in s.amplitudes() {
            w.write_all(&z.re.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_wavefunctions<R: Read>(mut r: R, grid: Arc<ProductGrid<f64>>) -> Result<Vec<Wavefunction<f64>>> {
    let mut header = [0u8; WF_HEADER_LEN];
    r.read_exact(&mut header)?;
    let text = std::str::from_utf8(&header).map_err(|_| Error::parse(1, "wavefunction header is not text"))?;
    let f: Vec<&str> = text.split_whitespace().collect();
    if f.len() != 4 || f[0] != WF_MAGIC || f[1] != VERSION {
        return Err(Error::parse(1, "bad wavefunction header"));
    }
    let n: usize = f[2].parse().map_err(|_| Error::parse(1, "bad state count"))?;
    let total: usize = f[3].parse().map_err(|_| Error::parse(1, "bad point count"))?;
    if total != grid.total_points() {
        return Err(Error::Shape(format!(
            "sidecar has {total} points per state, grid has {}",
            grid.total_points()
        )));
    }
    let mut buf = vec![0u8; 8 * total];
    (0..n)
        .map(|_| {
            r.read_exact(&mut buf)?;
            let vals: Vec<f64> = buf
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            Wavefunction::from_real(grid.clone(), &vals)
        })
        .collect()
}

pub fn save_wavefunctions(states: &[Wavefunction<f64>], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_wavefunctions(states, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_wavefunctions(path: impl AsRef<Path>, grid: Arc<ProductGrid<f64>>) -> Result<Vec<Wavefunction<f64>>> {
    read_wavefunctions(BufReader::new(std::fs::File::open(path)?), grid)
}

/// Convenience: relaxation config for `n` states with defaults elsewhere.
pub fn config_for(n_states: usize) -> RelaxationConfig {
    RelaxationConfig {
        n_states,
        ..Default::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::griddyn::{hermite_function, Axis, AxisLabel};
    use num_complex::Complex;

    #[test]
    fn partition_windows() {
        let w = 0.02;
        let e = [0.0, 0.98 * w, 1.02 * w, 1.95 * w, 2.0 * w, 2.1 * w, 3.0 * w];
        let p = partition_manifolds(&e, w).unwrap();
        assert_eq!(p.g, 0);
        assert_eq!(p.e_set, vec![1, 2]);
        assert_eq!(p.f_set, vec![3, 4, 5]);
        assert_eq!(p.unclassified, vec![6]);
        assert!(matches!(partition_manifolds(&e, 0.0), Err(Error::Partition(_))));
        assert!(partition_manifolds(&e[..3], w).is_err());
    }

    fn ho_states(n: usize, omega: f64) -> Vec<Wavefunction<f64>> {
        let g = Arc::new(ProductGrid::new(vec![Axis::new(AxisLabel::Qc, 128, -14.0, 14.0, 1.0).unwrap()]).unwrap());
        (0..n)
            .map(|k| {
                Wavefunction::from_fn(g.clone(), |x| Complex::new(hermite_function(k, x[0], 1.0, omega, 0.0), 0.0))
                    .normalized()
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn dipole_matrix_elements() {
        let omega = 0.8;
        let states = ho_states(3, omega);
        let grid = states[0].grid().clone();
        let c = vec![0.37; grid.total_points()];
        let m = transition_dipoles(&states, &c).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.37 } else { 0.0 };
                assert!((m[i][j] - want).abs() < 1e-10);
            }
        }
        let slope = 0.5;
        let lin = grid.tabulate(|x| slope * x[0]);
        let m = transition_dipoles(&states, &lin).unwrap();
        let want = slope / (2.0 * omega).sqrt();
        assert!((m[0][1] - want).abs() / want < 1e-8);
        assert!(m[0][2].abs() < 1e-8);
        assert_eq!(m[0][1], m[1][0]);
    }

    #[test]
    fn degenerate_runs_get_one_bright_state() {
        let e = [0.0, 1.0, 1.0 + 1e-12, 1.0 + 2e-12, 2.0, 2.0 + 1e-12];
        assert_eq!(degenerate_runs(&e), vec![1..4, 4..6]);
        assert!(degenerate_runs(&[0.0, 1e-12, 1.0]).is_empty());
        for u in [vec![0.1, 0.5, -0.2], vec![-0.3, 0.0, 0.4], vec![0.0, 0.0, 0.2]] {
            let h = bright_rotation(&u);
            let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            for i in 0..3 {
                let proj: f64 = h[i].iter().zip(&u).map(|(a, b)| a * b).sum();
                let want = if i == 0 { norm } else { 0.0 };
                assert!((proj - want).abs() < 1e-14, "{u:?} row {i}");
                for j in 0..3 {
                    let dot: f64 = h[i].iter().zip(&h[j]).map(|(a, b)| a * b).sum();
                    assert!((dot - f64::from(u8::from(i == j))).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn eigen_file_round_trip() {
        let states = ho_states(4, 1.0);
        let grid = states[0].grid().clone();
        let lin = grid.tabulate(|x| 0.3 * x[0]);
        let dip = transition_dipoles(&states, &lin).unwrap();
        let mut sol = EigenSolution::from_parts(vec![0.5, 1.5, 2.5, 3.5], states, dip, 1.0).unwrap();
        sol.metadata.insert("variant".into(), "free".into());
        let mut buf = Vec::new();
        write_eigen_solution(&sol, &mut buf).unwrap();
        let back = read_eigen_solution(buf.as_slice()).unwrap();
        assert_eq!(back.energies, sol.energies);
        assert_eq!(back.dipoles, sol.dipoles);
        assert_eq!(back.partition, sol.partition);
        assert_eq!(back.grid.as_deref(), Some(grid.as_ref()));

        let mut wf = Vec::new();
        write_wavefunctions(&sol.states, &mut wf).unwrap();
        assert_eq!(wf.len(), 64 + 4 * 128 * 8);
        let loaded = read_wavefunctions(wf.as_slice(), grid).unwrap();
        for (a, b) in loaded.iter().zip(&sol.states) {
            assert_eq!(a.amplitudes(), b.amplitudes());
        }
    }
}
