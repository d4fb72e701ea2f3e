use crate::scalar::Real;

/// Normalized harmonic-oscillator eigenfunctions 0..=n_max at `x`, for mass `mass`,
/// frequency `omega` and centre `center`. Uses the stable three-term recurrence
/// on the normalized functions, so large `n` does not overflow.
pub fn hermite_functions<T: Real>(n_max: usize, x: T, mass: T, omega: T, center: T) -> Vec<T> {
    let alpha = mass * omega;
    let xi = alpha.sqrt() * (x - center);
    let mut out = Vec::with_capacity(n_max + 1);
    let scale = alpha.sqrt().sqrt();
    let p0 = T::PI().powf(T::of(-0.25)) * (-(xi * xi) / T::of(2.0)).exp();
    out.push(p0);
    if n_max >= 1 {
        out.push(T::of(2.0).sqrt() * xi * p0);
    }
    for k in 1..n_max {
        let kk = T::of(k as f64);
        let next = (T::of(2.0) / (kk + T::one())).sqrt() * xi * out[k] - (kk / (kk + T::one())).sqrt() * out[k - 1];
        out.push(next);
    }
    out.iter_mut().for_each(|v| *v = *v * scale);
    out
}

pub fn hermite_function<T: Real>(n: usize, x: T, mass: T, omega: T, center: T) -> T {
    hermite_functions(n, x, mass, omega, center)[n]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_by_quadrature() {
        let (m, w) = (2.0, 0.7);
        let n = 4000;
        let (a, b) = (-12.0, 12.0);
        let h = (b - a) / n as f64;
        let mut s = [[0.0; 6]; 6];
        for k in 0..=n {
            let x = a + k as f64 * h;
            let f = hermite_functions(5, x, m, w, 0.3);
            for i in 0..6 {
                for j in 0..6 {
                    s[i][j] += f[i] * f[j] * h;
                }
            }
        }
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s[i][j] - want).abs() < 1e-10, "{i}{j} {}", s[i][j]);
            }
        }
    }

    #[test]
    fn first_excited_is_odd_about_center() {
        let f1: f64 = hermite_function(1, 1.3, 1.0, 1.0, 0.5);
        let f2 = hermite_function(1, -0.3, 1.0, 1.0, 0.5);
        assert!((f1 + f2).abs() < 1e-14);
    }
}
