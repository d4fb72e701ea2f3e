//! Uniform product grids, wavefunctions on them, and spectral application of
//! kinetic and diagonal operators.
//!
//! Storage is row-major with the last axis fastest. The photon displacement
//! axis, when present, is always last.

mod hermite;
mod spectral;
mod wavefunction;

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use hermite::{hermite_function, hermite_functions};
pub use spectral::{apply_kinetic, GridHamiltonian, KineticOperator, LinearOperator, SpectralTransform};
pub use wavefunction::{apply_diagonal, gram_schmidt_deflate, inner_product, Wavefunction};

/// Edge amplitude above which a state is considered to feel the periodic boundary.
pub const BOUNDARY_LEAK_LIMIT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AxisLabel {
    R1,
    R2,
    Qc,
}

impl AxisLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisLabel::R1 => "r1",
            AxisLabel::R2 => "r2",
            AxisLabel::Qc => "qc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "r1" => Some(AxisLabel::R1),
            "r2" => Some(AxisLabel::R2),
            "qc" => Some(AxisLabel::Qc),
            _ => None,
        }
    }

    pub fn is_nuclear(self) -> bool {
        !matches!(self, AxisLabel::Qc)
    }
}

impl fmt::Display for AxisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One uniformly spaced coordinate axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis<T> {
    label: AxisLabel,
    n_points: usize,
    min: T,
    max: T,
    mass: T,
}

impl<T: Real> Axis<T> {
    pub const MIN_POINTS: usize = 16;

    pub fn new(label: AxisLabel, n_points: usize, min: T, max: T, mass: T) -> Result<Self> {
        if n_points < Self::MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "axis {label}: n_points = {n_points} < {}",
                Self::MIN_POINTS
            )));
        }
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "axis {label}: max ({max}) must exceed min ({min})"
            )));
        }
        if !(mass > T::zero()) || !mass.is_finite() {
            return Err(Error::InvalidParameter(format!("axis {label}: mass must be positive")));
        }
        Ok(Axis {
            label,
            n_points,
            min,
            max,
            mass,
        })
    }

    pub fn label(&self) -> AxisLabel {
        self.label
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn min(&self) -> T {
        self.min
    }

    pub fn max(&self) -> T {
        self.max
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn spacing(&self) -> T {
        (self.max - self.min) / T::of((self.n_points - 1) as f64)
    }

    pub fn coord(&self, i: usize) -> T {
        self.min + self.spacing() * T::of(i as f64)
    }

    pub fn coords(&self) -> Vec<T> {
        (0..self.n_points).map(|i| self.coord(i)).collect()
    }

    /// Length of the periodic cell seen by the discrete Fourier transform.
    pub fn period(&self) -> T {
        self.spacing() * T::of(self.n_points as f64)
    }

    /// Angular wavenumbers in unshifted FFT order.
    pub fn wavenumbers(&self) -> Vec<T> {
        let n = self.n_points;
        let dk = T::of(2.0) * T::PI() / self.period();
        (0..n)
            .map(|j| {
                let m = if j < n.div_ceil(2) { j as f64 } else { j as f64 - n as f64 };
                dk * T::of(m)
            })
            .collect()
    }

    /// Same axis with a different label (used to clone an r-axis for a second molecule).
    pub fn relabeled(&self, label: AxisLabel) -> Self {
        Axis {
            label,
            ..self.clone()
        }
    }
}

/// Ordered set of axes, r-axes first and the photon axis (if any) last.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductGrid<T> {
    axes: Vec<Axis<T>>,
}

impl<T: Real> ProductGrid<T> {
    pub fn new(axes: Vec<Axis<T>>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidParameter(format!(
                "product grid needs 1 to 3 axes, got {}",
                axes.len()
            )));
        }
        let n_qc = axes.iter().filter(|a| a.label == AxisLabel::Qc).count();
        if n_qc > 1 {
            return Err(Error::InvalidParameter("more than one qc axis".into()));
        }
        if n_qc == 1 && axes.last().map(|a| a.label) != Some(AxisLabel::Qc) {
            return Err(Error::InvalidParameter("the qc axis must be last".into()));
        }
        for (i, a) in axes.iter().enumerate() {
            if axes[..i].iter().any(|b| b.label == a.label) {
                return Err(Error::InvalidParameter(format!("duplicate axis label {}", a.label)));
            }
        }
        Ok(ProductGrid { axes })
    }

    pub fn axes(&self) -> &[Axis<T>] {
        &self.axes
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n_points).collect()
    }

    pub fn total_points(&self) -> usize {
        self.axes.iter().map(|a| a.n_points).product()
    }

    pub fn volume_element(&self) -> T {
        self.axes.iter().fold(T::one(), |acc, a| acc * a.spacing())
    }

    pub fn qc_axis(&self) -> Option<usize> {
        self.axes.iter().position(|a| a.label == AxisLabel::Qc)
    }

    /// Number of nuclear (r) axes.
    pub fn n_nuclear(&self) -> usize {
        self.axes.iter().filter(|a| a.label.is_nuclear()).count()
    }

    /// Multi-index of a flat (row-major) index.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for (d, a) in self.axes.iter().enumerate().rev() {
            idx[d] = flat % a.n_points;
            flat /= a.n_points;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        self.axes
            .iter()
            .zip(idx)
            .fold(0, |acc, (a, &i)| acc * a.n_points + i)
    }

    /// Coordinates of a flat index; unused trailing slots are zero.
    pub fn point(&self, flat: usize) -> [T; 3] {
        let idx = self.unravel(flat);
        let mut x = [T::zero(); 3];
        for (d, a) in self.axes.iter().enumerate() {
            x[d] = a.coord(idx[d]);
        }
        x
    }

    /// True when the flat index sits on the first or last point of any axis.
    pub fn is_edge(&self, flat: usize) -> bool {
        let idx = self.unravel(flat);
        self.axes
            .iter()
            .enumerate()
            .any(|(d, a)| idx[d] == 0 || idx[d] + 1 == a.n_points)
    }

    /// Evaluate `f` at every grid point in storage order.
    pub fn tabulate<F: Fn(&[T]) -> T>(&self, f: F) -> Vec<T> {
        let nd = self.ndim();
        (0..self.total_points())
            .map(|k| {
                let x = self.point(k);
                f(&x[..nd])
            })
            .collect()
    }
}
