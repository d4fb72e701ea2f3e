//! Frequency-domain double-quantum-coherence signal at t1 = 0 from the g/e/f manifolds,
//! normalization, channels, difference maps and peak extraction.

mod io;
mod peaks;

use num_complex::Complex;
use rayon::prelude::*;

use crate::eigen::EigenSolution;
use crate::error::{Error, Result};
use crate::units::hartree_to_cm;

pub use io::{
    load_real_map, load_spectrum, read_real_map, read_spectrum, save_real_map, save_spectrum, write_real_map,
    write_spectrum,
};
pub use peaks::{assign_peaks, find_peaks, manifold_labels, omega2_resonances, Peak, RESONANCE_MERGE_GAMMAS};

/// Uniform frequency axis in cm⁻¹.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyAxis {
    pub start: f64,
    pub step: f64,
    pub n: usize,
}

impl FrequencyAxis {
    pub fn new(start: f64, step: f64, n: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !start.is_finite() {
            return Err(Error::InvalidParameter(format!("frequency step must be positive, got {step}")));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!("frequency axis needs at least 2 points, got {n}")));
        }
        Ok(FrequencyAxis { start, step, n })
    }

    /// Axis from `start` to `end` inclusive with `n` points.
    pub fn spanning(start: f64, end: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("frequency axis needs at least 2 points, got {n}")));
        }
        Self::new(start, (end - start) / (n - 1) as f64, n)
    }

    /// Ω2 window 8200–8800 cm⁻¹ in 1 cm⁻¹ steps.
    pub fn default_omega2() -> Self {
        FrequencyAxis {
            start: 8200.0,
            step: 1.0,
            n: 601,
        }
    }

    /// Ω3 window 4000–4450 cm⁻¹ in 1 cm⁻¹ steps.
    pub fn default_omega3() -> Self {
        FrequencyAxis {
            start: 4000.0,
            step: 1.0,
            n: 451,
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }

    pub fn end(&self) -> f64 {
        self.value(self.n - 1)
    }
}

/// Complex S(Ω3, Ω2) stored Ω2-major: `values[i2 * n3 + i3]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumGrid {
    pub omega2: FrequencyAxis,
    pub omega3: FrequencyAxis,
    pub values: Vec<Complex<f64>>,
    pub gamma_cm: f64,
    /// max|S| divided out, when normalized.
    pub normalization: Option<f64>,
}

impl SpectrumGrid {
    pub fn new(omega2: FrequencyAxis, omega3: FrequencyAxis, values: Vec<Complex<f64>>, gamma_cm: f64) -> Result<Self> {
        if values.len() != omega2.n * omega3.n {
            return Err(Error::Shape(format!(
                "{} values for a {}x{} spectrum",
                values.len(),
                omega2.n,
                omega3.n
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical("spectrum contains non-finite values".into()));
        }
        Ok(SpectrumGrid {
            omega2,
            omega3,
            values,
            gamma_cm,
            normalization: None,
        })
    }

    pub fn at(&self, i2: usize, i3: usize) -> Complex<f64> {
        self.values[i2 * self.omega3.n + i3]
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    fn same_axes(&self, other: &SpectrumGrid) -> bool {
        self.omega2 == other.omega2 && self.omega3 == other.omega3
    }
}

/// One (e, e′, f) Liouville pathway pair of the DQC signal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pathway {
    pub e: usize,
    pub e_prime: usize,
    pub f: usize,
    /// μ_ge′ μ_e′f μ_fe μ_eg.
    pub amplitude: f64,
    /// Ω_fg, Ω_e′g and Ω_fe′ in cm⁻¹.
    pub omega_fg: f64,
    pub omega_epg: f64,
    pub omega_fep: f64,
}

/// All pathways over e, e′ ∈ e_set and f ∈ f_set, in sorted (e, e′, f) order.
pub fn pathways(eig: &EigenSolution) -> Result<Vec<Pathway>> {
    let p = &eig.partition;
    if p.e_set.is_empty() || p.f_set.is_empty() {
        return Err(Error::Partition("DQC needs non-empty e and f manifolds".into()));
    }
    let mu = &eig.dipoles;
    let en = &eig.energies;
    let g = p.g;
    let mut es = p.e_set.clone();
    es.sort_unstable();
    let mut fs = p.f_set.clone();
    fs.sort_unstable();
    let mut out = Vec::with_capacity(es.len() * es.len() * fs.len());
    for &e in &es {
        for &ep in &es {
            for &f in &fs {
                out.push(Pathway {
                    e,
                    e_prime: ep,
                    f,
                    amplitude: mu[g][ep] * mu[ep][f] * mu[f][e] * mu[e][g],
                    omega_fg: hartree_to_cm(en[f] - en[g]),
                    omega_epg: hartree_to_cm(en[ep] - en[g]),
                    omega_fep: hartree_to_cm(en[f] - en[ep]),
                });
            }
        }
    }
    Ok(out)
}

fn evaluate(paths: &[Pathway], gamma: f64, omega2: &FrequencyAxis, omega3: &FrequencyAxis) -> Vec<Complex<f64>> {
    let n3 = omega3.n;
    let w3 = omega3.values();
    let mut values = vec![Complex::new(0.0, 0.0); omega2.n * n3];
    values.par_chunks_mut(n3).enumerate().for_each(|(i2, row)| {
        let w2 = omega2.value(i2);
        let prefactors: Vec<Complex<f64>> = paths
            .iter()
            .map(|p| p.amplitude / Complex::new(w2 - p.omega_fg, gamma))
            .collect();
        for (i3, out) in row.iter_mut().enumerate() {
            let w = w3[i3];
            let mut s = Complex::new(0.0, 0.0);
            for (p, pre) in paths.iter().zip(&prefactors) {
                let bracket = Complex::new(w - p.omega_epg, gamma).inv() - Complex::new(w - p.omega_fep, gamma).inv();
                s += pre * bracket;
            }
            *out = s;
        }
    });
    values
}

/// S(Ω3, Ω2; t1 = 0) summed over all pathways, frequencies in cm⁻¹.
pub fn compute_dqc(
    eig: &EigenSolution,
    gamma_cm: f64,
    omega2: FrequencyAxis,
    omega3: FrequencyAxis,
) -> Result<SpectrumGrid> {
    if !(gamma_cm > 0.0) || !gamma_cm.is_finite() {
        return Err(Error::InvalidParameter(format!("dephasing must be positive, got {gamma_cm}")));
    }
    let paths = pathways(eig)?;
    let values = evaluate(&paths, gamma_cm, &omega2, &omega3);
    SpectrumGrid::new(omega2, omega3, values, gamma_cm)
}

/// Divide by max|S|, recording the divisor.
pub fn normalize_spectrum(s: &SpectrumGrid) -> Result<SpectrumGrid> {
    let m = s.max_abs();
    if !(m > 0.0) {
        return Err(Error::DegenerateInput("cannot normalize an all-zero spectrum".into()));
    }
    let mut out = s.clone();
    out.values.iter_mut().for_each(|z| *z /= m);
    out.normalization = Some(s.normalization.unwrap_or(1.0) * m);
    Ok(out)
}

/// Real matrix on the spectrum axes, Ω2-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMap {
    pub name: String,
    pub omega2: FrequencyAxis,
    pub omega3: FrequencyAxis,
    pub values: Vec<f64>,
}

impl RealMap {
    pub fn at(&self, i2: usize, i3: usize) -> f64 {
        self.values[i2 * self.omega3.n + i3]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Δ = |a|/max|a| − |b|/max|b|.
pub fn difference_spectrum(a: &SpectrumGrid, b: &SpectrumGrid) -> Result<RealMap> {
    if !a.same_axes(b) {
        return Err(Error::Shape("difference needs identical frequency axes".into()));
    }
    let (na, nb) = (normalize_spectrum(a)?, normalize_spectrum(b)?);
    Ok(RealMap {
        name: "diff".into(),
        omega2: a.omega2,
        omega3: a.omega3,
        values: na.values.iter().zip(&nb.values).map(|(x, y)| x.norm() - y.norm()).collect(),
    })
}

/// Re, Im and Abs channels, each divided by max|S|.
#[derive(Clone, Debug, PartialEq)]
pub struct Channels {
    pub re: RealMap,
    pub im: RealMap,
    pub abs: RealMap,
}

impl Channels {
    pub fn get(&self, name: &str) -> Option<&RealMap> {
        match name {
            "re" => Some(&self.re),
            "im" => Some(&self.im),
            "abs" => Some(&self.abs),
            _ => None,
        }
    }
}

pub fn spectrum_channels(s: &SpectrumGrid) -> Result<Channels> {
    let n = normalize_spectrum(s)?;
    let map = |name: &str, f: &dyn Fn(&Complex<f64>) -> f64| RealMap {
        name: name.into(),
        omega2: s.omega2,
        omega3: s.omega3,
        values: n.values.iter().map(f).collect(),
    };
    Ok(Channels {
        re: map("re", &|z| z.re),
        im: map("im", &|z| z.im),
        abs: map("abs", &|z| z.norm()),
    })
}
