use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::griddyn::{hermite_functions, GridHamiltonian, LinearOperator, ProductGrid, Wavefunction, BOUNDARY_LEAK_LIMIT};
use crate::scalar::Real;

/// Window (in sweeps) over which energies must be stationary.
pub const STATIONARY_WINDOW: usize = 50;
/// Edge amplitude of the harmonic ground-state guess above which the grid is rejected before relaxing.
/// Looser than the final check since the guess decays more slowly than a Morse state on the inner wall.
pub const TRIAL_LEAK_LIMIT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxationConfig {
    pub n_states: usize,
    /// Imaginary time step τ, atomic units.
    pub dt_imag: f64,
    pub krylov_order: usize,
    /// Energy change over the stationarity window below which a state is converged, hartree.
    pub energy_tol: f64,
    /// Maximum number of sweeps.
    pub max_steps: usize,
    /// Extra trial states carried above `n_states` to speed up convergence.
    pub guard: usize,
    /// Largest grid-normalized |ψ| tolerated on the grid edges of a converged state.
    pub leak_limit: f64,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        RelaxationConfig {
            n_states: 10,
            dt_imag: 50.0,
            krylov_order: 10,
            energy_tol: 1e-10,
            max_steps: 20000,
            guard: 2,
            leak_limit: BOUNDARY_LEAK_LIMIT,
        }
    }
}

impl RelaxationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 {
            return Err(Error::InvalidParameter("n_states must be at least 1".into()));
        }
        if !(self.dt_imag > 0.0) || !self.dt_imag.is_finite() {
            return Err(Error::InvalidParameter("dt_imag must be positive".into()));
        }
        if self.krylov_order < 4 {
            return Err(Error::InvalidParameter("krylov_order must be at least 4".into()));
        }
        if !(self.energy_tol > 0.0) {
            return Err(Error::InvalidParameter("energy_tol must be positive".into()));
        }
        if !(self.leak_limit > 0.0) {
            return Err(Error::InvalidParameter("leak_limit must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be positive".into()));
        }
        Ok(())
    }

    fn block_size(&self) -> usize {
        self.n_states + self.guard
    }
}

/// Lowest eigenpairs of a grid Hamiltonian, ascending, with grid-normalized states.
#[derive(Clone, Debug)]
pub struct GridStates<T: Real> {
    pub energies: Vec<f64>,
    pub states: Vec<Wavefunction<T>>,
    pub sweeps: usize,
}

struct Harmonic {
    center: Vec<f64>,
    omega: Vec<f64>,
    mass: Vec<f64>,
}

/// Local harmonic model of the potential at its grid minimum.
fn harmonic_model<T: Real>(grid: &ProductGrid<T>, potential: &[T], exchange: bool) -> Harmonic {
    let kmin = (0..potential.len())
        .min_by(|&a, &b| potential[a].partial_cmp(&potential[b]).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(0);
    let idx = grid.unravel(kmin);
    let nd = grid.ndim();
    let mut center = Vec::with_capacity(nd);
    let mut omega = Vec::with_capacity(nd);
    let mut mass = Vec::with_capacity(nd);
    for (d, a) in grid.axes().iter().enumerate() {
        let n = a.n_points();
        let h = a.spacing().to_f64_lossy();
        let i = idx[d].clamp(1, n - 2);
        let mut at = idx;
        let mut val = |j: usize| {
            at[d] = j;
            potential[grid.flat_index(&at[..nd])].to_f64_lossy()
        };
        let (vm, v0, vp) = (val(i - 1), val(i), val(i + 1));
        let curv = (vp - 2.0 * v0 + vm) / (h * h);
        let m = a.mass().to_f64_lossy();
        // Sub-grid minimum from the parabola through the three points.
        let denom = vp - 2.0 * v0 + vm;
        let shift = if denom > 0.0 { 0.5 * (vm - vp) / denom } else { 0.0 };
        let x0 = a.coord(i).to_f64_lossy() + shift.clamp(-1.0, 1.0) * h;
        let w = if curv > 0.0 {
            (curv / m).sqrt()
        } else {
            let sigma = (a.max() - a.min()).to_f64_lossy() / 10.0;
            1.0 / (m * sigma * sigma)
        };
        center.push(x0);
        omega.push(w);
        mass.push(m);
    }
    if exchange {
        let c = 0.5 * (center[0] + center[1]);
        let w = 0.5 * (omega[0] + omega[1]);
        center[0] = c;
        center[1] = c;
        omega[0] = w;
        omega[1] = w;
    }
    Harmonic { center, omega, mass }
}

/// True when the first two axes are identical nuclear axes and V is symmetric under their exchange.
fn exchange_symmetric<T: Real>(grid: &ProductGrid<T>, potential: &[T]) -> bool {
    let axes = grid.axes();
    if grid.n_nuclear() != 2 {
        return false;
    }
    let (a, b) = (&axes[0], &axes[1]);
    if a.relabeled(b.label()) != *b {
        return false;
    }
    let nd = grid.ndim();
    let scale = potential.iter().fold(T::zero(), |m, v| m.max(v.abs())).to_f64_lossy().max(1.0);
    (0..potential.len()).all(|k| {
        let mut idx = grid.unravel(k);
        idx.swap(0, 1);
        let j = grid.flat_index(&idx[..nd]);
        (potential[k] - potential[j]).abs().to_f64_lossy() <= 1e-12 * scale
    })
}

/// Harmonic product trial functions ordered by harmonic energy, exchange-symmetrized when possible.
fn initial_guesses<T: Real>(grid: &Arc<ProductGrid<T>>, potential: &[T], count: usize) -> Vec<Vec<T>> {
    let exchange = exchange_symmetric(grid, potential);
    let model = harmonic_model(grid, potential, exchange);
    let nd = grid.ndim();
    // Enumerate quantum-number tuples with enough headroom, then sort by harmonic energy.
    let wmin = model.omega.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut nmax = 1usize;
    let mut tuples: Vec<Vec<usize>>;
    loop {
        let base = nmax + 1;
        tuples = (0..base.pow(nd as u32))
            .map(|code| (0..nd).map(|d| (code / base.pow((nd - 1 - d) as u32)) % base).collect())
            .collect();
        let energy = |t: &Vec<usize>| -> f64 { t.iter().zip(&model.omega).map(|(&n, w)| n as f64 * w).sum() };
        tuples.retain(|t| energy(t) <= nmax as f64 * wmin * (1.0 + 1e-9));
        if tuples.len() >= 2 * count + 2 || nmax > 64 {
            tuples.sort_by(|a, b| energy(a).total_cmp(&energy(b)).then_with(|| a.cmp(b)));
            break;
        }
        nmax += 1;
    }

    // Per-axis Hermite tables.
    let tables: Vec<Vec<Vec<f64>>> = grid
        .axes()
        .iter()
        .enumerate()
        .map(|(d, a)| {
            let top = tuples.iter().map(|t| t[d]).max().unwrap_or(0);
            (0..a.n_points())
                .map(|i| hermite_functions(top, a.coord(i).to_f64_lossy(), model.mass[d], model.omega[d], model.center[d]))
                .collect()
        })
        .collect();
    let product = |t: &[usize]| -> Vec<T> {
        (0..grid.total_points())
            .map(|k| {
                let idx = grid.unravel(k);
                T::of((0..nd).map(|d| tables[d][idx[d]][t[d]]).product())
            })
            .collect()
    };

    let mut out = Vec::with_capacity(count);
    for t in &tuples {
        if out.len() >= count {
            break;
        }
        if exchange {
            if t[0] < t[1] {
                continue;
            }
            if t[0] == t[1] {
                out.push(product(t));
            } else {
                let a = product(t);
                let mut s = t.clone();
                s.swap(0, 1);
                let b = product(&s);
                out.push(a.iter().zip(&b).map(|(x, y)| *x + *y).collect());
                if out.len() < count {
                    out.push(a.iter().zip(&b).map(|(x, y)| *x - *y).collect());
                }
            }
        } else {
            out.push(product(t));
        }
    }
    out
}

fn edge_leak<T: Real>(grid: &Arc<ProductGrid<T>>, v: &[T]) -> Result<f64> {
    let wf = Wavefunction::from_real(grid.clone(), v)?.normalized()?;
    Ok(wf.edge_amplitude().to_f64_lossy())
}

fn rdot<T: Real>(a: &[T], b: &[T]) -> T {
    let mut acc = [T::zero(); 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail = ca.remainder().iter().zip(cb.remainder()).fold(T::zero(), |s, (x, y)| s + *x * *y);
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] = acc[l] + x[l] * y[l];
        }
    }
    acc[0] + acc[1] + acc[2] + acc[3] + tail
}

fn raxpy<T: Real>(y: &mut [T], c: T, x: &[T]) {
    y.iter_mut().zip(x).for_each(|(a, b)| *a = *a + c * *b);
}

fn rscale<T: Real>(y: &mut [T], c: T) {
    y.iter_mut().for_each(|a| *a = *a * c);
}

fn project_out<T: Real>(x: &mut [T], basis: &[Vec<T>]) {
    for b in basis {
        let c = rdot(b, x);
        raxpy(x, -c, b);
    }
}

/// Remove components along `basis` (orthonormal, Euclidean) twice and renormalize.
fn deflate<T: Real>(x: &mut [T], basis: &[Vec<T>]) -> Result<()> {
    let start = rdot(x, x).sqrt().to_f64_lossy();
    project_out(x, basis);
    project_out(x, basis);
    let n = rdot(x, x).sqrt();
    if !(n.to_f64_lossy() > 1e-12 * start.max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateInput("trial state lies in the span of lower states".into()));
    }
    rscale(x, T::one() / n);
    Ok(())
}

/// Applies the real Hamiltonian to one or two real vectors with a single complex transform.
struct PairedOperator<'a, T: Real> {
    h: &'a GridHamiltonian<T>,
    packed: Vec<Complex<T>>,
    out: Vec<Complex<T>>,
}

impl<'a, T: Real> PairedOperator<'a, T> {
    fn new(h: &'a GridHamiltonian<T>) -> Self {
        let zero = Complex::new(T::zero(), T::zero());
        PairedOperator {
            h,
            packed: vec![zero; h.dim()],
            out: vec![zero; h.dim()],
        }
    }

    fn apply(&mut self, a: &[T], b: Option<&[T]>, ya: &mut [T], yb: Option<&mut [T]>) {
        match b {
            Some(b) => {
                for ((z, x), y) in self.packed.iter_mut().zip(a).zip(b) {
                    *z = Complex::new(*x, *y);
                }
            }
            None => {
                for (z, x) in self.packed.iter_mut().zip(a) {
                    *z = Complex::new(*x, T::zero());
                }
            }
        }
        self.h.apply(&self.packed, &mut self.out);
        for (y, z) in ya.iter_mut().zip(&self.out) {
            *y = z.re;
        }
        if let Some(yb) = yb {
            for (y, z) in yb.iter_mut().zip(&self.out) {
                *y = z.im;
            }
        }
    }
}

/// One Lanczos recurrence on P H P, with P removing `lower`.
struct Lanczos<T> {
    basis: Vec<Vec<T>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    done: bool,
}

impl<T: Real> Lanczos<T> {
    fn new(x: &[T]) -> Self {
        let n = rdot(x, x).sqrt();
        let mut v = x.to_vec();
        rscale(&mut v, T::one() / n);
        Lanczos {
            basis: vec![v],
            alpha: Vec::new(),
            beta: Vec::new(),
            done: false,
        }
    }

    /// Absorb w = H v_j; returns the next basis vector slot or marks completion.
    fn absorb(&mut self, mut w: Vec<T>, lower: &[Vec<T>], order: usize) {
        project_out(&mut w, lower);
        let anorm = rdot(&w, &w).sqrt().to_f64_lossy();
        let j = self.basis.len() - 1;
        let mut a = 0.0;
        for _ in 0..2 {
            for (i, b) in self.basis.iter().enumerate() {
                let c = rdot(b, &w);
                raxpy(&mut w, -c, b);
                if i == j {
                    a += c.to_f64_lossy();
                }
            }
        }
        self.alpha.push(a);
        if self.alpha.len() == order {
            self.done = true;
            return;
        }
        let b = rdot(&w, &w).sqrt();
        if b.to_f64_lossy() <= 100.0 * T::epsilon().to_f64_lossy() * anorm.max(f64::MIN_POSITIVE) {
            self.done = true;
            return;
        }
        self.beta.push(b.to_f64_lossy());
        rscale(&mut w, T::one() / b);
        self.basis.push(w);
    }

    /// Normalized exp(−τ T_m) e1 mapped back to the grid.
    fn filtered(&self, tau: f64) -> Vec<T> {
        let m = self.alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = self.alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = self.beta[i];
                t[(i + 1, i)] = self.beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let theta_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        let coeffs: Vec<f64> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|k| {
                        eig.eigenvectors[(i, k)] * (-tau * (eig.eigenvalues[k] - theta_min)).exp() * eig.eigenvectors[(0, k)]
                    })
                    .sum()
            })
            .collect();
        let mut y = vec![T::zero(); self.basis[0].len()];
        for (c, b) in coeffs.iter().zip(&self.basis) {
            raxpy(&mut y, T::of(*c), b);
        }
        y
    }
}

/// Propagate block vectors `ks` (one or two) in lockstep, each deflated against the block below it.
fn propagate_group<T: Real>(
    op: &mut PairedOperator<'_, T>,
    block: &[Vec<T>],
    ks: &[usize],
    tau: f64,
    order: usize,
) -> Vec<Vec<T>> {
    let dim = block[0].len();
    let mut runs: Vec<Lanczos<T>> = ks.iter().map(|&k| Lanczos::new(&block[k])).collect();
    loop {
        let active: Vec<usize> = (0..runs.len()).filter(|&i| !runs[i].done).collect();
        if active.is_empty() {
            break;
        }
        let mut ya = vec![T::zero(); dim];
        if active.len() == 2 {
            let mut yb = vec![T::zero(); dim];
            {
                let (r0, r1) = (&runs[active[0]], &runs[active[1]]);
                op.apply(r0.basis.last().unwrap(), Some(r1.basis.last().unwrap()), &mut ya, Some(&mut yb));
            }
            runs[active[1]].absorb(yb, &block[..ks[active[1]]], order);
        } else {
            op.apply(runs[active[0]].basis.last().unwrap(), None, &mut ya, None);
        }
        runs[active[0]].absorb(ya, &block[..ks[active[0]]], order);
    }
    runs.iter().map(|r| r.filtered(tau)).collect()
}

struct Ritz {
    energies: Vec<f64>,
    residuals: Vec<f64>,
}

/// Rayleigh-Ritz rotation of an orthonormal block with residual norms of the rotated vectors.
fn rayleigh_ritz<T: Real>(op: &mut PairedOperator<'_, T>, block: &mut [Vec<T>]) -> Ritz {
    let p = block.len();
    let dim = block[0].len();
    let mut hb: Vec<Vec<T>> = vec![vec![T::zero(); dim]; p];
    for i in (0..p).step_by(2) {
        if i + 1 < p {
            let (lo, hi) = hb.split_at_mut(i + 1);
            op.apply(&block[i], Some(&block[i + 1]), &mut lo[i], Some(&mut hi[0]));
        } else {
            op.apply(&block[i], None, &mut hb[i], None);
        }
    }
    let mut m = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let c = 0.5 * (rdot(&block[i], &hb[j]) + rdot(&block[j], &hb[i])).to_f64_lossy();
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let rotate = |src: &[Vec<T>], k: usize| {
        let mut v = vec![T::zero(); dim];
        for (j, b) in src.iter().enumerate() {
            raxpy(&mut v, T::of(eig.eigenvectors[(j, k)]), b);
        }
        v
    };
    let mut energies = Vec::with_capacity(p);
    let mut residuals = Vec::with_capacity(p);
    let mut rotated = Vec::with_capacity(p);
    for &k in &order {
        let mut v = rotate(block, k);
        let mut hv = rotate(&hb, k);
        let n = rdot(&v, &v).sqrt();
        rscale(&mut v, T::one() / n);
        rscale(&mut hv, T::one() / n);
        let theta = eig.eigenvalues[k];
        raxpy(&mut hv, T::of(-theta), &v);
        residuals.push(rdot(&hv, &hv).sqrt().to_f64_lossy());
        energies.push(theta);
        rotated.push(v);
    }
    for (b, r) in block.iter_mut().zip(rotated) {
        *b = r;
    }
    Ritz { energies, residuals }
}

/// Ritz residual ‖Hχ − Eχ‖ (hartree) below which a state is locked and no longer propagated.
pub const LOCK_RESIDUAL: f64 = 1e-10;

/// Lowest `cfg.n_states` eigenpairs of T + V on `grid` by deflated imaginary-time Krylov
/// propagation of a block of trial states with Rayleigh-Ritz rotation after each sweep.
pub fn solve_grid_states<T: Real>(
    grid: Arc<ProductGrid<T>>,
    potential: Vec<T>,
    cfg: &RelaxationConfig,
) -> Result<GridStates<T>> {
    cfg.validate()?;
    let p = cfg.block_size();
    if p > grid.total_points() / 2 {
        return Err(Error::InvalidParameter(format!(
            "{p} trial states on a grid of {} points",
            grid.total_points()
        )));
    }
    let h = GridHamiltonian::new(grid.clone(), potential)?;
    let mut block = initial_guesses(&grid, h.potential(), p);
    if block.len() < p {
        return Err(Error::InvalidParameter("could not build enough trial states".into()));
    }
    let leak = edge_leak(&grid, &block[0])?;
    if leak > TRIAL_LEAK_LIMIT {
        return Err(Error::BoundaryLeak {
            what: "ground-state trial function".into(),
            amplitude: leak,
            limit: TRIAL_LEAK_LIMIT,
        });
    }
    for k in 0..p {
        let (lower, rest) = block.split_at_mut(k);
        deflate(&mut rest[0], lower)?;
    }
    let mut op = PairedOperator::new(&h);
    let mut ritz = rayleigh_ritz(&mut op, &mut block);
    let mut history: Vec<Vec<f64>> = vec![ritz.energies.clone()];
    let tau = cfg.dt_imag;
    let mut last_delta = f64::INFINITY;
    let mut worst = 0usize;
    for sweep in 1..=cfg.max_steps {
        let locked: Vec<bool> = ritz.residuals.iter().map(|&r| r < LOCK_RESIDUAL).collect();
        let targets_locked = locked[..cfg.n_states].iter().all(|&l| l);
        // Guard vectors only accelerate the targets, so they stop once every target is locked.
        let active: Vec<usize> = (0..p)
            .filter(|&k| if k < cfg.n_states { !locked[k] } else { !targets_locked })
            .collect();
        if !active.is_empty() {
            for pair in active.chunks(2) {
                for &k in pair {
                    let (lower, rest) = block.split_at_mut(k);
                    deflate(&mut rest[0], lower)?;
                }
                let out = propagate_group(&mut op, &block, pair, tau, cfg.krylov_order);
                for (&k, y) in pair.iter().zip(out) {
                    block[k] = y;
                    let (lower, rest) = block.split_at_mut(k);
                    deflate(&mut rest[0], lower)?;
                }
            }
            ritz = rayleigh_ritz(&mut op, &mut block);
        }
        if ritz.energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::Numerical("non-finite Ritz value during relaxation".into()));
        }
        history.push(ritz.energies.clone());
        if sweep >= STATIONARY_WINDOW {
            let old = &history[sweep - STATIONARY_WINDOW];
            let (k, delta) = (0..cfg.n_states)
                .map(|k| (k, (ritz.energies[k] - old[k]).abs()))
                .fold((0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            last_delta = delta;
            worst = k;
            if delta < cfg.energy_tol {
                let states = block
                    .iter()
                    .take(cfg.n_states)
                    .map(|v| {
                        let mut wf = Wavefunction::from_real(grid.clone(), v)?;
                        wf.normalize()?;
                        wf.fix_phase();
                        Ok(wf)
                    })
                    .collect::<Result<Vec<_>>>()?;
                for (k, s) in states.iter().enumerate() {
                    let amp = s.edge_amplitude().to_f64_lossy();
                    if amp > cfg.leak_limit {
                        return Err(Error::BoundaryLeak {
                            what: format!("state {k}"),
                            amplitude: amp,
                            limit: cfg.leak_limit,
                        });
                    }
                }
                let mut energies = ritz.energies;
                energies.truncate(cfg.n_states);
                return Ok(GridStates {
                    energies,
                    states,
                    sweeps: sweep,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        stage: "eigen",
        iterations: cfg.max_steps,
        residual: last_delta,
        context: Some(format!("state {worst}")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::griddyn::{Axis, AxisLabel};

    #[test]
    fn separable_harmonic_2d() {
        let (wa, wb) = (1.0, 1.37);
        let axes = vec![
            Axis::new(AxisLabel::R1, 48, -9.0, 9.0, 1.0).unwrap(),
            Axis::new(AxisLabel::Qc, 48, -9.0, 9.0, 1.0).unwrap(),
        ];
        let g = Arc::new(ProductGrid::new(axes).unwrap());
        let v = g.tabulate(|x| 0.5 * wa * wa * x[0] * x[0] + 0.5 * wb * wb * x[1] * x[1]);
        let cfg = RelaxationConfig {
            energy_tol: 1e-12,
            ..Default::default()
        };
        let sol = solve_grid_states(g, v, &cfg).unwrap();
        let mut want: Vec<f64> = (0..6)
            .flat_map(|a| (0..6).map(move |b| wa * (a as f64 + 0.5) + wb * (b as f64 + 0.5)))
            .collect();
        want.sort_by(f64::total_cmp);
        for (e, w) in sol.energies.iter().zip(&want) {
            assert!((e - w).abs() / w < 1e-7, "{e} vs {w}");
        }
        for i in 0..sol.states.len() {
            for j in 0..i {
                let o = crate::griddyn::inner_product(&sol.states[i], &sol.states[j]).unwrap();
                assert!(o.norm() < 1e-8);
            }
        }
    }

    #[test]
    fn narrow_grid_leaks() {
        let axes = vec![Axis::new(AxisLabel::Qc, 32, -2.0, 2.0, 1.0).unwrap()];
        let g = Arc::new(ProductGrid::new(axes).unwrap());
        let v = g.tabulate(|x| 0.5 * 0.1 * 0.1 * x[0] * x[0]);
        let cfg = RelaxationConfig {
            n_states: 2,
            ..Default::default()
        };
        assert!(matches!(solve_grid_states(g, v, &cfg), Err(Error::BoundaryLeak { .. })));
    }
}
