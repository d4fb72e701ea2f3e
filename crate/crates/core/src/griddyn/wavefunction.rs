use std::sync::Arc;

use num_complex::Complex;

use super::ProductGrid;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Complex amplitudes on a [`ProductGrid`], row-major with the last axis fastest.
#[derive(Clone, Debug)]
pub struct Wavefunction<T: Real> {
    grid: Arc<ProductGrid<T>>,
    amps: Vec<Complex<T>>,
}

impl<T: Real> Wavefunction<T> {
    pub fn zeros(grid: Arc<ProductGrid<T>>) -> Self {
        let n = grid.total_points();
        Wavefunction {
            grid,
            amps: vec![Complex::new(T::zero(), T::zero()); n],
        }
    }

    pub fn from_amplitudes(grid: Arc<ProductGrid<T>>, amps: Vec<Complex<T>>) -> Result<Self> {
        if amps.len() != grid.total_points() {
            return Err(Error::Shape(format!(
                "{} amplitudes for a grid of {} points",
                amps.len(),
                grid.total_points()
            )));
        }
        Ok(Wavefunction { grid, amps })
    }

    pub fn from_real(grid: Arc<ProductGrid<T>>, values: &[T]) -> Result<Self> {
        let amps = values.iter().map(|&v| Complex::new(v, T::zero())).collect();
        Self::from_amplitudes(grid, amps)
    }

    /// Tabulate a complex function of the grid coordinates.
    pub fn from_fn<F: Fn(&[T]) -> Complex<T>>(grid: Arc<ProductGrid<T>>, f: F) -> Self {
        let nd = grid.ndim();
        let amps = (0..grid.total_points())
            .map(|k| {
                let x = grid.point(k);
                f(&x[..nd])
            })
            .collect();
        Wavefunction { grid, amps }
    }

    pub fn grid(&self) -> &Arc<ProductGrid<T>> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amps
    }

    pub fn norm_sqr(&self) -> T {
        let s = self.amps.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        s * self.grid.volume_element()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&mut self, c: Complex<T>) {
        self.amps.iter_mut().for_each(|z| *z = *z * c);
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: Complex<T>, other: &Wavefunction<T>) -> Result<()> {
        same_grid(self, other)?;
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a = *a + *b * c;
        }
        Ok(())
    }

    /// Scale to unit norm. Fails on an all-zero state.
    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::DegenerateInput(format!("cannot normalize a state of norm {n}")));
        }
        self.scale(Complex::new(T::one() / n, T::zero()));
        Ok(())
    }

    pub fn normalized(mut self) -> Result<Self> {
        self.normalize()?;
        Ok(self)
    }

    pub fn is_finite(&self) -> bool {
        self.amps.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Rotate the global phase so the largest-magnitude amplitude is real and positive.
    pub fn fix_phase(&mut self) {
        let mut best = 0;
        let mut best_mag = T::zero();
        for (k, z) in self.amps.iter().enumerate() {
            let m = z.norm_sqr();
            if m > best_mag {
                best_mag = m;
                best = k;
            }
        }
        if best_mag > T::zero() {
            let z = self.amps[best];
            let phase = z.conj() / z.norm();
            self.scale(phase);
        }
    }

    /// Largest |ψ| on the outermost points of any axis.
    pub fn edge_amplitude(&self) -> T {
        let mut m = T::zero();
        for (k, z) in self.amps.iter().enumerate() {
            if self.grid.is_edge(k) {
                m = m.max(z.norm());
            }
        }
        m
    }

    /// Largest |Im ψ| after phase fixing, relative to the largest |ψ|.
    pub fn imaginary_residue(&self) -> T {
        let max = self.amps.iter().fold(T::zero(), |m, z| m.max(z.norm()));
        if max == T::zero() {
            return T::zero();
        }
        self.amps.iter().fold(T::zero(), |m, z| m.max(z.im.abs())) / max
    }

    pub fn real_parts(&self) -> Vec<T> {
        self.amps.iter().map(|z| z.re).collect()
    }
}

fn same_grid<T: Real>(a: &Wavefunction<T>, b: &Wavefunction<T>) -> Result<()> {
    if Arc::ptr_eq(&a.grid, &b.grid) || a.grid == b.grid {
        Ok(())
    } else {
        Err(Error::Shape("wavefunctions live on different grids".into()))
    }
}

/// ⟨a|b⟩ including the volume element.
pub fn inner_product<T: Real>(a: &Wavefunction<T>, b: &Wavefunction<T>) -> Result<Complex<T>> {
    same_grid(a, b)?;
    let s = a
        .amps
        .iter()
        .zip(&b.amps)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y);
    Ok(s * a.grid.volume_element())
}

/// Pointwise multiplication by a real surface tabulated on the same grid.
pub fn apply_diagonal<T: Real>(psi: &Wavefunction<T>, surface: &[T]) -> Result<Wavefunction<T>> {
    if surface.len() != psi.amps.len() {
        return Err(Error::Shape(format!(
            "surface has {} values, grid has {} points",
            surface.len(),
            psi.amps.len()
        )));
    }
    let amps = psi.amps.iter().zip(surface).map(|(z, &v)| *z * v).collect();
    Ok(Wavefunction {
        grid: psi.grid.clone(),
        amps,
    })
}

/// Project out an orthonormal `basis` from `psi` and renormalize.
pub fn gram_schmidt_deflate<T: Real>(psi: &Wavefunction<T>, basis: &[Wavefunction<T>]) -> Result<Wavefunction<T>> {
    let mut out = psi.clone();
    let start = out.norm();
    // Two passes keep the result orthogonal at round-off level.
    for _ in 0..2 {
        for b in basis {
            let c = inner_product(b, &out)?;
            out.axpy(-c, b)?;
        }
    }
    let residual = out.norm();
    if !(residual >= T::of(1e-12) * start.max(T::one())) {
        return Err(Error::DegenerateInput(format!(
            "trial state lies in the span of the basis (residual norm {residual:e})"
        )));
    }
    out.normalize()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::griddyn::{hermite_function, Axis, AxisLabel};

    fn qgrid(n: usize, half: f64) -> Arc<ProductGrid<f64>> {
        Arc::new(ProductGrid::new(vec![Axis::new(AxisLabel::Qc, n, -half, half, 1.0).unwrap()]).unwrap())
    }

    fn level(grid: &Arc<ProductGrid<f64>>, n: usize, omega: f64) -> Wavefunction<f64> {
        Wavefunction::from_fn(grid.clone(), |x| Complex::new(hermite_function(n, x[0], 1.0, omega, 0.0), 0.0))
    }

    #[test]
    fn inner_product_basics() {
        let g = qgrid(128, 12.0);
        let psi = level(&g, 0, 1.0).normalized().unwrap();
        let s = inner_product(&psi, &psi).unwrap();
        assert!((s.re - 1.0).abs() < 1e-12 && s.im.abs() < 1e-12);
        let mut ipsi = psi.clone();
        ipsi.scale(Complex::new(0.0, 1.0));
        let s = inner_product(&psi, &ipsi).unwrap();
        assert!(s.re.abs() < 1e-12 && (s.im - 1.0).abs() < 1e-12);
        let other = level(&g, 3, 1.0);
        assert!(inner_product(&psi, &other).unwrap().norm() < 1e-10);
        // conjugate symmetry
        let ab = inner_product(&ipsi, &other).unwrap();
        let ba = inner_product(&other, &ipsi).unwrap();
        assert!((ab - ba.conj()).norm() < 1e-14);
    }

    #[test]
    fn grid_mismatch_is_a_shape_error() {
        let a = level(&qgrid(64, 10.0), 0, 1.0);
        let b = level(&qgrid(32, 10.0), 0, 1.0);
        assert!(matches!(inner_product(&a, &b), Err(Error::Shape(_))));
        assert!(matches!(apply_diagonal(&a, &[1.0; 3]), Err(Error::Shape(_))));
    }

    #[test]
    fn diagonal_identity_and_zero() {
        let g = qgrid(64, 10.0);
        let psi = level(&g, 1, 1.0);
        let zero = apply_diagonal(&psi, &vec![0.0; 64]).unwrap();
        assert!(zero.amplitudes().iter().all(|z| z.norm() == 0.0));
        let same = apply_diagonal(&psi, &vec![1.0; 64]).unwrap();
        assert_eq!(same.amplitudes(), psi.amplitudes());
    }

    #[test]
    fn harmonic_potential_expectation() {
        let omega = 0.8;
        let g = qgrid(128, 14.0);
        let psi = level(&g, 0, omega).normalized().unwrap();
        let v = g.tabulate(|x| 0.5 * omega * omega * x[0] * x[0]);
        let e = inner_product(&psi, &apply_diagonal(&psi, &v).unwrap()).unwrap().re;
        assert!((e - omega / 4.0).abs() / (omega / 4.0) < 1e-8);
    }

    #[test]
    fn deflation_cases() {
        let g = qgrid(128, 12.0);
        let phi0 = level(&g, 0, 1.0).normalized().unwrap();
        let phi1 = level(&g, 1, 1.0).normalized().unwrap();
        assert!(matches!(
            gram_schmidt_deflate(&phi0, std::slice::from_ref(&phi0)),
            Err(Error::DegenerateInput(_))
        ));
        let mut unnorm = phi1.clone();
        unnorm.scale(Complex::new(3.0, 0.0));
        let out = gram_schmidt_deflate(&unnorm, &[]).unwrap();
        assert!((out.norm() - 1.0).abs() < 1e-12);
        let mut mix = phi0.clone();
        mix.axpy(Complex::new(1.0, 0.0), &phi1).unwrap();
        mix.scale(Complex::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
        let out = gram_schmidt_deflate(&mix, std::slice::from_ref(&phi0)).unwrap();
        assert!(inner_product(&phi0, &out).unwrap().norm() < 1e-10);
        assert!((inner_product(&phi1, &out).unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn phase_fixing_makes_peak_real_positive() {
        let g = qgrid(64, 10.0);
        let mut psi = level(&g, 1, 1.0);
        psi.axpy(Complex::new(0.5, 0.0), &level(&g, 0, 1.0)).unwrap();
        psi.scale(Complex::from_polar(1.0, 2.0));
        psi.fix_phase();
        assert!(psi.imaginary_residue() < 1e-14);
        let peak = psi.amplitudes().iter().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap();
        assert!(peak.re > 0.0);
    }
}
