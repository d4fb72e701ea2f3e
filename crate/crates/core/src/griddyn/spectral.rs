use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{ProductGrid, Wavefunction};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// A Hermitian operator acting on flat complex vectors.
pub trait LinearOperator<T: Real>: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`. Both slices have length `dim()`.
    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]);
}

struct AxisPlan<T: Real> {
    n: usize,
    outer: usize,
    inner: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

/// Unnormalized N-dimensional DFT over a row-major product grid.
pub struct SpectralTransform<T: Real> {
    total: usize,
    plans: Vec<AxisPlan<T>>,
}

impl<T: Real> SpectralTransform<T> {
    pub fn new(shape: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let total = shape.iter().product();
        let plans = (0..shape.len())
            .map(|d| AxisPlan {
                n: shape[d],
                outer: shape[..d].iter().product(),
                inner: shape[d + 1..].iter().product(),
                forward: planner.plan_fft_forward(shape[d]),
                inverse: planner.plan_fft_inverse(shape[d]),
            })
            .collect();
        SpectralTransform { total, plans }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// In-place forward transform without normalization.
    pub fn forward_raw(&self, data: &mut [Complex<T>]) {
        self.run(data, true);
    }

    /// In-place inverse transform without normalization.
    pub fn inverse_raw(&self, data: &mut [Complex<T>]) {
        self.run(data, false);
    }

    /// Unitary forward transform (scaled by 1/√N).
    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.forward_raw(data);
        self.scale_unitary(data);
    }

    /// Unitary inverse transform (scaled by 1/√N).
    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.inverse_raw(data);
        self.scale_unitary(data);
    }

    fn scale_unitary(&self, data: &mut [Complex<T>]) {
        let s = T::one() / T::of(self.total as f64).sqrt();
        data.par_iter_mut().for_each(|z| *z = *z * s);
    }

    fn run(&self, data: &mut [Complex<T>], forward: bool) {
        assert_eq!(data.len(), self.total, "transform length mismatch");
        for plan in &self.plans {
            let fft = if forward { &plan.forward } else { &plan.inverse };
            if plan.n == 1 {
                continue;
            }
            if plan.inner == 1 {
                // Contiguous lines: batch several per task.
                let lines_per_task = (4096 / plan.n).max(1);
                data.par_chunks_mut(plan.n * lines_per_task).for_each(|chunk| {
                    let mut scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
                    fft.process_with_scratch(chunk, &mut scratch);
                });
            } else {
                let block = plan.n * plan.inner;
                debug_assert_eq!(block * plan.outer, self.total);
                data.par_chunks_mut(block).for_each(|chunk| {
                    let zero = Complex::new(T::zero(), T::zero());
                    let mut buf = vec![zero; block];
                    let mut scratch = vec![zero; fft.get_inplace_scratch_len()];
                    // Rows of length `inner`, one per axis index; put the axis last.
                    transpose::transpose(chunk, &mut buf, plan.inner, plan.n);
                    fft.process_with_scratch(&mut buf, &mut scratch);
                    transpose::transpose(&buf, chunk, plan.n, plan.inner);
                });
            }
        }
    }
}

/// Spectral kinetic energy Σ_a k_a²/(2 m_a) on a periodic product grid.
pub struct KineticOperator<T: Real> {
    transform: SpectralTransform<T>,
    /// k²/2m per spectral point, with the 1/N of the inverse transform folded in.
    multiplier: Vec<T>,
    max_energy: T,
}

impl<T: Real> KineticOperator<T> {
    pub fn new(grid: &ProductGrid<T>) -> Self {
        let shape = grid.shape();
        let total = grid.total_points();
        let per_axis: Vec<Vec<T>> = grid
            .axes()
            .iter()
            .map(|a| {
                let two_m = T::of(2.0) * a.mass();
                a.wavenumbers().into_iter().map(|k| k * k / two_m).collect()
            })
            .collect();
        let inv_n = T::one() / T::of(total as f64);
        let mut max_energy = T::zero();
        let multiplier = (0..total)
            .map(|flat| {
                let idx = grid.unravel(flat);
                let e = (0..shape.len()).fold(T::zero(), |acc, d| acc + per_axis[d][idx[d]]);
                max_energy = max_energy.max(e);
                e * inv_n
            })
            .collect();
        KineticOperator {
            transform: SpectralTransform::new(&shape),
            multiplier,
            max_energy,
        }
    }

    /// Largest kinetic eigenvalue representable on the grid.
    pub fn max_energy(&self) -> T {
        self.max_energy
    }

    pub fn dim(&self) -> usize {
        self.multiplier.len()
    }

    /// `y = T x`.
    pub fn apply_into(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        y.copy_from_slice(x);
        self.transform.forward_raw(y);
        y.par_iter_mut()
            .zip(self.multiplier.par_iter())
            .for_each(|(z, &m)| *z = *z * m);
        self.transform.inverse_raw(y);
    }
}

impl<T: Real> LinearOperator<T> for KineticOperator<T> {
    fn dim(&self) -> usize {
        self.multiplier.len()
    }

    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        self.apply_into(x, y);
    }
}

/// Kinetic energy of `psi` on its own grid.
pub fn apply_kinetic<T: Real>(psi: &Wavefunction<T>) -> Result<Wavefunction<T>> {
    let op = KineticOperator::new(psi.grid());
    let mut out = vec![Complex::new(T::zero(), T::zero()); op.dim()];
    op.apply_into(psi.amplitudes(), &mut out);
    Wavefunction::from_amplitudes(psi.grid().clone(), out)
}

/// H = T + V(x) on a product grid.
pub struct GridHamiltonian<T: Real> {
    grid: Arc<ProductGrid<T>>,
    kinetic: KineticOperator<T>,
    potential: Vec<T>,
}

impl<T: Real> GridHamiltonian<T> {
    pub fn new(grid: Arc<ProductGrid<T>>, potential: Vec<T>) -> Result<Self> {
        if potential.len() != grid.total_points() {
            return Err(Error::Shape(format!(
                "potential has {} values, grid has {} points",
                potential.len(),
                grid.total_points()
            )));
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("potential contains non-finite values".into()));
        }
        let kinetic = KineticOperator::new(&grid);
        Ok(GridHamiltonian {
            grid,
            kinetic,
            potential,
        })
    }

    pub fn grid(&self) -> &Arc<ProductGrid<T>> {
        &self.grid
    }

    pub fn potential(&self) -> &[T] {
        &self.potential
    }

    pub fn kinetic(&self) -> &KineticOperator<T> {
        &self.kinetic
    }

    /// Bounds on the spectrum: [min V, max V + max T].
    pub fn spectral_bounds(&self) -> (T, T) {
        let (lo, hi) = self
            .potential
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        (lo, hi + self.kinetic.max_energy())
    }

    pub fn apply_wf(&self, psi: &Wavefunction<T>) -> Result<Wavefunction<T>> {
        if psi.grid().as_ref() != self.grid.as_ref() {
            return Err(Error::Shape("wavefunction grid differs from Hamiltonian grid".into()));
        }
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.dim()];
        self.apply(psi.amplitudes(), &mut out);
        Wavefunction::from_amplitudes(self.grid.clone(), out)
    }

    /// ⟨ψ|H|ψ⟩ for a normalized ψ.
    pub fn expectation(&self, psi: &Wavefunction<T>) -> Result<T> {
        let hpsi = self.apply_wf(psi)?;
        Ok(super::inner_product(psi, &hpsi)?.re)
    }
}

impl<T: Real> LinearOperator<T> for GridHamiltonian<T> {
    fn dim(&self) -> usize {
        self.potential.len()
    }

    fn apply(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        self.kinetic.apply_into(x, y);
        y.par_iter_mut()
            .zip(x.par_iter().zip(self.potential.par_iter()))
            .for_each(|(out, (&xi, &v))| *out = *out + xi * v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::griddyn::{hermite_function, inner_product, Axis, AxisLabel};

    fn qgrid(n: usize, half: f64) -> Arc<ProductGrid<f64>> {
        Arc::new(ProductGrid::new(vec![Axis::new(AxisLabel::Qc, n, -half, half, 1.0).unwrap()]).unwrap())
    }

    #[test]
    fn constant_has_zero_kinetic_energy() {
        let g = qgrid(64, 10.0);
        let psi = Wavefunction::from_real(g, &[0.3; 64]).unwrap();
        let t = apply_kinetic(&psi).unwrap();
        assert!(t.amplitudes().iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn harmonic_ground_state_kinetic_expectation() {
        let omega = 1.3;
        let g = qgrid(128, 12.0);
        let psi = Wavefunction::from_fn(g, |x| Complex::new(hermite_function(0, x[0], 1.0, omega, 0.0), 0.0))
            .normalized()
            .unwrap();
        let t = inner_product(&psi, &apply_kinetic(&psi).unwrap()).unwrap().re;
        assert!((t - omega / 4.0).abs() / (omega / 4.0) < 1e-8, "{t}");
    }

    #[test]
    fn harmonic_second_level_total_energy() {
        let omega = 0.9;
        let g = qgrid(128, 14.0);
        let psi = Wavefunction::from_fn(g.clone(), |x| Complex::new(hermite_function(2, x[0], 1.0, omega, 0.0), 0.0))
            .normalized()
            .unwrap();
        let v = g.tabulate(|x| 0.5 * omega * omega * x[0] * x[0]);
        let h = GridHamiltonian::new(g, v).unwrap();
        let e = h.expectation(&psi).unwrap();
        assert!((e - 2.5 * omega).abs() / (2.5 * omega) < 1e-8, "{e}");
    }

    #[test]
    fn multidimensional_transform_matches_separable_result() {
        // A 3D Gaussian with anisotropic masses: ⟨T⟩ is the sum of 1D results.
        let axes = vec![
            Axis::new(AxisLabel::R1, 32, -8.0, 8.0, 2.0).unwrap(),
            Axis::new(AxisLabel::R2, 32, -8.0, 8.0, 0.5).unwrap(),
            Axis::new(AxisLabel::Qc, 32, -10.0, 10.0, 1.0).unwrap(),
        ];
        let g = Arc::new(ProductGrid::new(axes).unwrap());
        let w = [0.8, 1.1, 0.6];
        let m = [2.0, 0.5, 1.0];
        let psi = Wavefunction::from_fn(g, |x| {
            Complex::new(
                (0..3).map(|d| hermite_function(0, x[d], m[d], w[d], 0.0)).product(),
                0.0,
            )
        })
        .normalized()
        .unwrap();
        let t = inner_product(&psi, &apply_kinetic(&psi).unwrap()).unwrap().re;
        let want: f64 = w.iter().sum::<f64>() / 4.0;
        assert!((t - want).abs() / want < 1e-7, "{t} vs {want}");
    }

    #[test]
    fn unitary_transform_round_trip() {
        let shape = [16, 32];
        let tr = SpectralTransform::<f64>::new(&shape);
        let data: Vec<Complex<f64>> = (0..512)
            .map(|k| Complex::new((k as f64 * 0.37).sin(), (k as f64 * 0.11).cos()))
            .collect();
        let n0: f64 = data.iter().map(|z| z.norm_sqr()).sum();
        let mut x = data.clone();
        tr.forward(&mut x);
        let n1: f64 = x.iter().map(|z| z.norm_sqr()).sum();
        assert!((n1 - n0).abs() / n0 < 1e-12);
        tr.inverse(&mut x);
        for (a, b) in x.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn single_precision_kinetic() {
        let omega = 1.0f32;
        let g = Arc::new(ProductGrid::new(vec![Axis::new(AxisLabel::Qc, 64, -10.0f32, 10.0, 1.0).unwrap()]).unwrap());
        let psi = Wavefunction::from_fn(g, |x| Complex::new(hermite_function(0, x[0], 1.0, omega, 0.0), 0.0))
            .normalized()
            .unwrap();
        let t = inner_product(&psi, &apply_kinetic(&psi).unwrap()).unwrap().re;
        assert!((t - 0.25).abs() < 1e-4);
    }
}
