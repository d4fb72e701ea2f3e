use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::griddyn::{GridHamiltonian, LinearOperator, Wavefunction};
use crate::scalar::Real;

pub(crate) fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter()
        .zip(b)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

pub(crate) fn norm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
}

pub(crate) fn axpy<T: Real>(y: &mut [Complex<T>], c: Complex<T>, x: &[Complex<T>]) {
    y.iter_mut().zip(x).for_each(|(a, b)| *a = *a + *b * c);
}

pub(crate) fn scale<T: Real>(y: &mut [Complex<T>], c: T) {
    y.iter_mut().for_each(|a| *a = *a * c);
}

/// Diagnostics of one Krylov propagation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovInfo {
    /// Dimension of the Krylov subspace actually built.
    pub dimension: usize,
    /// True when the subspace became invariant before reaching the requested order.
    pub breakdown: bool,
    /// Rayleigh quotient of the input vector.
    pub energy_in: f64,
    /// Rayleigh quotient of the output vector.
    pub energy_out: f64,
}

/// Normalized exp(−τA)x from an order-`order` Lanczos subspace of the Hermitian operator `apply`.
///
/// The Euclidean norm is used throughout, so any constant volume element drops out.
pub fn propagate_vector<T, F>(apply: F, x: &[Complex<T>], tau: T, order: usize) -> Result<(Vec<Complex<T>>, KrylovInfo)>
where
    T: Real,
    F: Fn(&[Complex<T>], &mut [Complex<T>]),
{
    if order == 0 {
        return Err(Error::InvalidParameter("Krylov order must be at least 1".into()));
    }
    if !(tau >= T::zero()) {
        return Err(Error::InvalidParameter("imaginary time step must be non-negative".into()));
    }
    let n0 = norm(x);
    if !(n0 > T::zero()) || !n0.is_finite() {
        return Err(Error::DegenerateInput("cannot propagate a zero or non-finite vector".into()));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let mut v0 = x.to_vec();
    scale(&mut v0, T::one() / n0);
    let mut basis = vec![v0];
    let mut alpha: Vec<f64> = Vec::with_capacity(order);
    let mut beta: Vec<f64> = Vec::with_capacity(order);
    let mut w = vec![zero; x.len()];
    let mut breakdown = false;
    let eps = T::epsilon().to_f64_lossy();
    for j in 0..order {
        apply(&basis[j], &mut w);
        let anorm = norm(&w).to_f64_lossy();
        let mut a = 0.0;
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let c = dot(b, &w);
                axpy(&mut w, -c, b);
                if i == j {
                    a += c.re.to_f64_lossy();
                }
            }
        }
        alpha.push(a);
        if j + 1 == order {
            break;
        }
        let b = norm(&w);
        if b.to_f64_lossy() <= 100.0 * eps * anorm.max(f64::MIN_POSITIVE) {
            breakdown = true;
            break;
        }
        beta.push(b.to_f64_lossy());
        scale(&mut w, T::one() / b);
        basis.push(std::mem::replace(&mut w, vec![zero; x.len()]));
    }
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let theta_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let tau = tau.to_f64_lossy();
    let weights: Vec<f64> = (0..m)
        .map(|k| (-tau * (eig.eigenvalues[k] - theta_min)).exp() * eig.eigenvectors[(0, k)])
        .collect();
    let coeffs: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|k| eig.eigenvectors[(i, k)] * weights[k]).sum())
        .collect();
    let cnorm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let energy_out = (0..m)
        .map(|k| eig.eigenvalues[k] * weights[k] * weights[k])
        .sum::<f64>()
        / (cnorm * cnorm);
    let mut y = vec![zero; x.len()];
    for (c, b) in coeffs.iter().zip(&basis) {
        axpy(&mut y, Complex::new(T::of(c / cnorm), T::zero()), b);
    }
    let ny = norm(&y);
    scale(&mut y, T::one() / ny);
    Ok((
        y,
        KrylovInfo {
            dimension: m,
            breakdown,
            energy_in: alpha[0],
            energy_out,
        },
    ))
}

/// One imaginary-time step exp(−Hτ)ψ, renormalized on the grid with the phase fixed
/// so the largest amplitude is real and positive.
pub fn krylov_imaginary_step<T: Real>(
    psi: &Wavefunction<T>,
    h: &GridHamiltonian<T>,
    tau: T,
    order: usize,
) -> Result<Wavefunction<T>> {
    if psi.grid().as_ref() != h.grid().as_ref() {
        return Err(Error::Shape("wavefunction grid differs from Hamiltonian grid".into()));
    }
    let (y, _) = propagate_vector(|x, out| h.apply(x, out), psi.amplitudes(), tau, order)?;
    let mut out = Wavefunction::from_amplitudes(psi.grid().clone(), y)?;
    out.normalize()?;
    out.fix_phase();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_apply(a: &[[f64; 4]; 4]) -> impl Fn(&[Complex<f64>], &mut [Complex<f64>]) + '_ {
        move |x, y| {
            for i in 0..4 {
                y[i] = (0..4).map(|j| x[j] * a[i][j]).sum();
            }
        }
    }

    #[test]
    fn energy_does_not_increase() {
        let a = [[1.0, 0.3, 0.0, 0.1], [0.3, 2.0, 0.4, 0.0], [0.0, 0.4, 3.0, 0.2], [0.1, 0.0, 0.2, 5.0]];
        let x: Vec<Complex<f64>> = [0.2, 0.5, 0.7, 0.4].iter().map(|&v| Complex::new(v, 0.0)).collect();
        let (_, info) = propagate_vector(dense_apply(&a), &x, 0.7, 3).unwrap();
        assert!(info.energy_out <= info.energy_in + 1e-12);
    }

    #[test]
    fn invariant_subspace_breakdown() {
        let a = [[1.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0], [0.0, 0.0, 3.0, 0.0], [0.0, 0.0, 0.0, 4.0]];
        let x: Vec<Complex<f64>> = [0.0, 1.0, 0.0, 0.0].iter().map(|&v| Complex::new(v, 0.0)).collect();
        let (y, info) = propagate_vector(dense_apply(&a), &x, 5.0, 4).unwrap();
        assert!(info.breakdown);
        assert_eq!(info.dimension, 1);
        assert!((y[1].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_vector_rejected() {
        let a = [[1.0; 4]; 4];
        let x = vec![Complex::new(0.0, 0.0); 4];
        assert!(propagate_vector(dense_apply(&a), &x, 1.0, 4).is_err());
    }

    use crate::griddyn::{Axis, AxisLabel, ProductGrid};
    use std::sync::Arc;

    fn harmonic(n: usize, half: f64, omega: f64) -> GridHamiltonian<f64> {
        let g = Arc::new(ProductGrid::new(vec![Axis::new(AxisLabel::Qc, n, -half, half, 1.0).unwrap()]).unwrap());
        let v = g.tabulate(|x| 0.5 * omega * omega * x[0] * x[0]);
        GridHamiltonian::new(g, v).unwrap()
    }

    fn dense_matrix(h: &GridHamiltonian<f64>) -> DMatrix<f64> {
        let n = h.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![Complex::new(0.0, 0.0); n];
        let mut y = e.clone();
        for j in 0..n {
            e[j] = Complex::new(1.0, 0.0);
            h.apply(&e, &mut y);
            for i in 0..n {
                m[(i, j)] = y[i].re;
            }
            e[j] = Complex::new(0.0, 0.0);
        }
        0.5 * (&m + m.transpose())
    }

    #[test]
    fn eigenstate_is_invariant() {
        let h = harmonic(16, 4.0, 1.0);
        let eig = SymmetricEigen::new(dense_matrix(&h));
        let k = (0..16).min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).unwrap();
        let amps = (0..16).map(|i| Complex::new(eig.eigenvectors[(i, k)], 0.0)).collect();
        let mut psi = Wavefunction::from_amplitudes(h.grid().clone(), amps).unwrap().normalized().unwrap();
        psi.fix_phase();
        let out = krylov_imaginary_step(&psi, &h, 2.0, 10).unwrap();
        for (a, b) in out.amplitudes().iter().zip(psi.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn full_order_matches_dense_exponential() {
        let h = harmonic(16, 4.0, 1.0);
        let eig = SymmetricEigen::new(dense_matrix(&h));
        let x: Vec<f64> = (0..16).map(|i| (-(i as f64 - 6.0).powi(2) / 8.0).exp() * (1.0 + 0.1 * i as f64)).collect();
        let tau = 0.8;
        let coeff = eig.eigenvectors.transpose() * DMatrix::from_column_slice(16, 1, &x);
        let mut want = DMatrix::<f64>::zeros(16, 1);
        for k in 0..16 {
            want += eig.eigenvectors.column(k) * (coeff[k] * (-tau * eig.eigenvalues[k]).exp());
        }
        let want = &want / want.norm();
        let xc: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let (y, info) = propagate_vector(|a, b| h.apply(a, b), &xc, tau, 16).unwrap();
        assert_eq!(info.dimension, 16);
        for i in 0..16 {
            assert!((y[i].re - want[i]).abs() < 1e-10 && y[i].im.abs() < 1e-10);
        }
    }

    #[test]
    fn harmonic_relaxes_to_ground_energy() {
        let omega = 1.0;
        let h = harmonic(128, 12.0, omega);
        let mut psi = Wavefunction::from_fn(h.grid().clone(), |x| {
            Complex::new((-(x[0] - 1.3).powi(2) / 3.0).exp() * (1.0 + 0.4 * x[0] + 0.1 * (2.0 * x[0]).sin()), 0.0)
        })
        .normalized()
        .unwrap();
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            psi = krylov_imaginary_step(&psi, &h, 0.5, 10).unwrap();
            let e = h.expectation(&psi).unwrap();
            assert!(e <= last + 1e-12);
            last = e;
        }
        assert!((last - 0.5 * omega).abs() < 1e-8, "{last}");
    }
}

