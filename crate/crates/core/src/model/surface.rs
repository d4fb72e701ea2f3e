use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::{morse_potential, scf_electronic_ground, CavityMode, DipoleModel, MorseParams, NuclearDipole, ScfSettings,
    SurfaceVariant};
use crate::error::{Error, Result};
use crate::griddyn::{Axis, AxisLabel, ProductGrid};
use crate::units::hartree_to_cm;

const MAGIC: &str = "#POLDQC-SURFACE";
const VERSION: &str = "v1";

/// Potential and total-dipole surfaces on a product grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSet {
    grid: Arc<ProductGrid<f64>>,
    variant: SurfaceVariant,
    potential: Vec<f64>,
    dipole: Vec<f64>,
    metadata: BTreeMap<String, String>,
}

impl SurfaceSet {
    pub fn new(
        grid: Arc<ProductGrid<f64>>,
        variant: SurfaceVariant,
        potential: Vec<f64>,
        dipole: Vec<f64>,
        metadata: BTreeMap<String, String>,
    ) -> Result<Self> {
        let n = grid.total_points();
        if potential.len() != n || dipole.len() != n {
            return Err(Error::Shape(format!(
                "surface arrays have {} and {} values, grid has {n} points",
                potential.len(),
                dipole.len()
            )));
        }
        if potential.iter().chain(&dipole).any(|v| !v.is_finite()) {
            return Err(Error::Numerical("surface contains non-finite values".into()));
        }
        if metadata.keys().any(|k| k.is_empty() || k.contains(['=', '\n']) || k == "variant") {
            return Err(Error::InvalidParameter("metadata keys must be non-empty, without '=' or newlines".into()));
        }
        Ok(SurfaceSet {
            grid,
            variant,
            potential,
            dipole,
            metadata,
        })
    }

    pub fn grid(&self) -> &Arc<ProductGrid<f64>> {
        &self.grid
    }

    pub fn variant(&self) -> SurfaceVariant {
        self.variant
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn dipole(&self) -> &[f64] {
        &self.dipole
    }

    pub fn metadata(&self) -> &BTreeMap<String, String> {
        &self.metadata
    }

    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.metadata.get(key).and_then(|v| v.parse().ok())
    }

    /// Photon frequency recorded in the metadata, hartree.
    pub fn omega_c(&self) -> Option<f64> {
        self.meta_f64("omega_c_cm").map(crate::units::cm_to_hartree)
    }

    pub fn n_mol(&self) -> usize {
        self.grid.n_nuclear()
    }
}

fn model_metadata(
    morse: &MorseParams,
    dip: &DipoleModel,
    cav: &CavityMode,
    offset: f64,
) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    let mut put = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    put("n_mol", cav.n_mol.to_string());
    put("omega_c_cm", format!("{}", hartree_to_cm(cav.omega_c)));
    put("lambda0", format!("{}", cav.lambda0));
    put("lambda_c", format!("{}", cav.lambda_c()));
    put("morse_d_hartree", format!("{}", morse.d));
    put("morse_a_per_bohr", format!("{}", morse.a));
    put("morse_re_bohr", format!("{}", morse.re));
    put("mass_au", format!("{}", morse.mass));
    match dip.nuclear {
        NuclearDipole::Linear { mu0, slope, re } => {
            put("dipole_form", "linear".into());
            put("dipole_mu0_au", format!("{mu0}"));
            put("dipole_slope_au", format!("{slope}"));
            put("dipole_re_bohr", format!("{re}"));
        }
        NuclearDipole::Mecke { charge, r_star } => {
            put("dipole_form", "mecke".into());
            put("dipole_charge_au", format!("{charge}"));
            put("dipole_rstar_bohr", format!("{r_star}"));
        }
    }
    put("electronic_gap_au", format!("{}", dip.gap));
    put("electronic_dipole_au", format!("{}", dip.transition));
    put("energy_offset_hartree", format!("{offset}"));
    put("source", "two-level mean-field model".into());
    m
}

/// Tabulate the surfaces of one variant. The field-free global minimum is subtracted from the potential.
pub fn build_surface_set(
    grid: Arc<ProductGrid<f64>>,
    morse: &MorseParams,
    dip: &DipoleModel,
    cav: &CavityMode,
    variant: SurfaceVariant,
) -> Result<SurfaceSet> {
    build_surface_set_with(grid, morse, dip, cav, variant, ScfSettings::default())
}

pub fn build_surface_set_with(
    grid: Arc<ProductGrid<f64>>,
    morse: &MorseParams,
    dip: &DipoleModel,
    cav: &CavityMode,
    variant: SurfaceVariant,
    settings: ScfSettings,
) -> Result<SurfaceSet> {
    morse.validate()?;
    cav.validate()?;
    dip.validate(cav.omega_c)?;
    let n_mol = grid.n_nuclear();
    if n_mol != cav.n_mol || grid.qc_axis().is_none() {
        return Err(Error::Shape(format!(
            "grid needs {} r-axes and a qc axis, has {n_mol} r-axes{}",
            cav.n_mol,
            if grid.qc_axis().is_none() { " and no qc axis" } else { "" }
        )));
    }
    if grid.axes()[..n_mol].iter().any(|a| !(a.min() > 0.0)) {
        return Err(Error::InvalidParameter("bond-length axes must start above r = 0".into()));
    }

    let field_free = |x: &[f64]| -> f64 {
        x[..n_mol].iter().map(|&r| morse_potential(r, morse)).sum::<f64>() + cav.photon_energy(x[n_mol])
    };
    let offset = (0..grid.total_points())
        .map(|k| field_free(&grid.point(k)))
        .fold(f64::INFINITY, f64::min);

    let values: Vec<Result<(f64, f64)>> = (0..grid.total_points())
        .into_par_iter()
        .map(|k| {
            let x = grid.point(k);
            let r = &x[..n_mol];
            let qc = x[n_mol];
            let mu_nuc: f64 = r.iter().map(|&ri| dip.nuclear.value(ri)).sum();
            match variant {
                SurfaceVariant::FieldFree => Ok((field_free(&x) - offset, mu_nuc)),
                _ => {
                    let st = scf_electronic_ground(r, qc, morse, cav, dip, variant, settings)?;
                    let mu = match variant {
                        SurfaceVariant::Etc => mu_nuc,
                        _ => st.dipoles.iter().sum(),
                    };
                    Ok((st.energy + cav.photon_energy(qc) - offset, mu))
                }
            }
        })
        .collect();

    let mut potential = Vec::with_capacity(values.len());
    let mut dipole = Vec::with_capacity(values.len());
    for (k, v) in values.into_iter().enumerate() {
        match v {
            Ok((e, m)) => {
                potential.push(e);
                dipole.push(m);
            }
            Err(Error::NonConvergence {
                stage,
                iterations,
                residual,
                ..
            }) => {
                return Err(Error::NonConvergence {
                    stage,
                    iterations,
                    residual,
                    context: Some(format!("grid point {k} {:?}", &grid.point(k)[..grid.ndim()])),
                })
            }
            Err(e) => return Err(e),
        }
    }
    let metadata = model_metadata(morse, dip, cav, offset);
    SurfaceSet::new(grid, variant, potential, dipole, metadata)
}

pub(crate) fn format_axis(a: &Axis<f64>) -> String {
    format!("#axis {} {} {:?} {:?} {:?}", a.label(), a.n_points(), a.min(), a.max(), a.mass())
}

pub(crate) fn parse_axis(line_no: usize, rest: &str) -> Result<Axis<f64>> {
    let f: Vec<&str> = rest.split_whitespace().collect();
    if f.len() != 5 {
        return Err(Error::parse(line_no, format!("axis line needs 5 fields, found {}", f.len())));
    }
    let label = AxisLabel::parse(f[0]).ok_or_else(|| Error::parse(line_no, format!("unknown axis label '{}'", f[0])))?;
    let n: usize = f[1]
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad point count '{}'", f[1])))?;
    let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::parse(line_no, format!("bad number '{s}'"))) };
    Axis::new(label, n, num(f[2])?, num(f[3])?, num(f[4])?).map_err(|e| Error::parse(line_no, e.to_string()))
}

pub fn save_surface_set(s: &SurfaceSet, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write_surface_set(s, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_surface_set<W: Write>(s: &SurfaceSet, w: &mut W) -> Result<()> {
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "#variant={}", s.variant)?;
    for (k, v) in &s.metadata {
        writeln!(w, "#{k}={v}")?;
    }
    for a in s.grid.axes() {
        writeln!(w, "{}", format_axis(a))?;
    }
    writeln!(w, "#columns V mu")?;
    let mut line = String::with_capacity(64);
    for (v, m) in s.potential.iter().zip(&s.dipole) {
        line.clear();
        write!(line, "{v:.16e} {m:.16e}").expect("formatting into a String");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn load_surface_set(path: impl AsRef<Path>) -> Result<SurfaceSet> {
    read_surface_set(BufReader::new(std::fs::File::open(path)?))
}

pub fn read_surface_set<R: BufRead>(r: R) -> Result<SurfaceSet> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (no, first) = lines.next().ok_or_else(|| Error::parse(1, "empty surface file"))?;
    let first = first?;
    let mut head = first.split_whitespace();
    if head.next() != Some(MAGIC) {
        return Err(Error::parse(no, "missing #POLDQC-SURFACE header"));
    }
    match head.next() {
        Some(VERSION) => {}
        other => {
            return Err(Error::parse(no, format!("unsupported surface version {}", other.unwrap_or("<none>"))))
        }
    }
    let mut variant = None;
    let mut metadata = BTreeMap::new();
    let mut axes = Vec::new();
    let mut columns_line = None;
    for (no, line) in lines.by_ref() {
        let line = line?;
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| Error::parse(no, "expected a header line before #columns"))?;
        if let Some(rest) = body.strip_prefix("axis ") {
            axes.push(parse_axis(no, rest)?);
        } else if let Some(rest) = body.strip_prefix("columns") {
            if rest.split_whitespace().collect::<Vec<_>>() != ["V", "mu"] {
                return Err(Error::parse(no, "columns must be 'V mu'"));
            }
            columns_line = Some(no);
            break;
        } else if let Some((k, v)) = body.split_once('=') {
            if k == "variant" {
                variant =
                    Some(SurfaceVariant::parse(v).ok_or_else(|| Error::parse(no, format!("unknown variant '{v}'")))?);
            } else {
                metadata.insert(k.to_string(), v.to_string());
            }
        } else {
            return Err(Error::parse(no, format!("malformed header line '{line}'")));
        }
    }
    let col_no = columns_line.ok_or_else(|| Error::parse(0, "missing #columns line"))?;
    let variant = variant.ok_or_else(|| Error::parse(col_no, "missing #variant"))?;
    let grid = Arc::new(ProductGrid::new(axes).map_err(|e| Error::parse(col_no, e.to_string()))?);
    let expected = grid.total_points();
    let mut potential = Vec::with_capacity(expected);
    let mut dipole = Vec::with_capacity(expected);
    let mut last = col_no;
    for (no, line) in lines {
        let line = line?;
        last = no;
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split_whitespace();
        let (a, b) = match (f.next(), f.next(), f.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(Error::parse(no, "data line needs exactly 2 values")),
        };
        let num = |s: &str| -> Result<f64> { s.parse().map_err(|_| Error::parse(no, format!("bad number '{s}'"))) };
        potential.push(num(a)?);
        dipole.push(num(b)?);
    }
    if potential.len() != expected {
        return Err(Error::parse(
            last,
            format!("expected {expected} data lines, found {}", potential.len()),
        ));
    }
    SurfaceSet::new(grid, variant, potential, dipole, metadata)
}
