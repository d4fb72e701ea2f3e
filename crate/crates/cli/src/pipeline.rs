use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use poldqc_core::basis::{build_bare_basis, decompose};
use poldqc_core::dqc::{
    assign_peaks, compute_dqc, difference_spectrum, find_peaks, load_spectrum, manifold_labels, normalize_spectrum,
    omega2_resonances, save_real_map, save_spectrum, spectrum_channels,
};
use poldqc_core::eigen::{load_eigen_solution, load_wavefunctions, relax_eigenstates, save_eigen_solution, save_wavefunctions};
use poldqc_core::model::{build_surface_set_with, calibrate_dipole_slope, load_surface_set, save_surface_set};

use crate::config::RunConfig;
use crate::error::{CliError, StageExt};
use crate::manifest::RunManifest;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Calibrate,
    Surface,
    Solve,
    Decompose,
    Spectrum,
    Diff,
    Peaks,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Calibrate => "calibrate",
            Command::Surface => "surface",
            Command::Solve => "solve",
            Command::Decompose => "decompose",
            Command::Spectrum => "spectrum",
            Command::Diff => "diff",
            Command::Peaks => "peaks",
        }
    }

    pub fn needs_config(self) -> bool {
        !matches!(self, Command::Diff | Command::Peaks)
    }

    /// (minimum, maximum) number of `--input` files.
    fn input_count(self) -> (usize, usize) {
        match self {
            Command::Calibrate | Command::Surface => (0, 0),
            Command::Solve | Command::Decompose | Command::Spectrum => (1, 1),
            Command::Diff => (2, 2),
            Command::Peaks => (1, 2),
        }
    }
}

pub const CHANNELS: [&str; 3] = ["re", "im", "abs"];

#[derive(Clone, Debug)]
pub struct Request {
    pub command: Command,
    pub config: Option<RunConfig>,
    pub inputs: Vec<PathBuf>,
    pub out: Option<PathBuf>,
    pub channels: Vec<String>,
    pub threshold: Option<f64>,
    pub settings: Vec<(String, String)>,
}

/// Sidecar holding the wavefunctions of an eigen file.
pub fn sidecar_path(eigen: &Path) -> PathBuf {
    let mut s = eigen.as_os_str().to_os_string();
    s.push(".wf");
    PathBuf::from(s)
}

/// `spectrum.txt` → `spectrum.re.txt`.
pub fn channel_path(out: &Path, channel: &str) -> PathBuf {
    match (out.file_stem(), out.extension()) {
        (Some(stem), Some(ext)) => out.with_file_name(format!(
            "{}.{channel}.{}",
            stem.to_string_lossy(),
            ext.to_string_lossy()
        )),
        _ => {
            let mut s = out.as_os_str().to_os_string();
            s.push(format!(".{channel}"));
            PathBuf::from(s)
        }
    }
}

fn default_out(cmd: Command, cfg: Option<&RunConfig>) -> PathBuf {
    let v = cfg.map(|c| c.variant.as_str()).unwrap_or("full");
    PathBuf::from(match cmd {
        Command::Calibrate => "calibration.txt".to_string(),
        Command::Surface => format!("surface_{v}.txt"),
        Command::Solve => "eigen.txt".to_string(),
        Command::Decompose => "decomposition.tsv".to_string(),
        Command::Spectrum => "spectrum.txt".to_string(),
        Command::Diff => "diff.txt".to_string(),
        Command::Peaks => "peaks.tsv".to_string(),
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Execute one stage; returns the manifest path.
pub fn run(req: &Request) -> Result<PathBuf, CliError> {
    let cmd = req.command;
    let (lo, hi) = cmd.input_count();
    if req.inputs.len() < lo || req.inputs.len() > hi {
        return Err(CliError::Usage(format!(
            "{} takes {} --input file(s), got {}",
            cmd.name(),
            if lo == hi { lo.to_string() } else { format!("{lo} to {hi}") },
            req.inputs.len()
        )));
    }
    let cfg = match (&req.config, cmd.needs_config()) {
        (Some(c), _) => {
            c.validate()?;
            Some(c)
        }
        (None, true) => return Err(CliError::Usage(format!("{} needs --config", cmd.name()))),
        (None, false) => None,
    };
    for ch in &req.channels {
        if !CHANNELS.contains(&ch.as_str()) {
            return Err(CliError::Usage(format!("unknown channel '{ch}' (expected re, im or abs)")));
        }
    }
    if !req.channels.is_empty() && cmd != Command::Spectrum {
        return Err(CliError::Usage("--channels applies to the spectrum command only".into()));
    }
    let out = req.out.clone().unwrap_or_else(|| default_out(cmd, cfg));
    let mut m = RunManifest::new(cmd.name());
    m.settings = req.settings.clone();
    m.config = cfg.map(|c| c.to_text());
    for p in &req.inputs {
        m.input(p)?;
        if cmd == Command::Decompose {
            m.input(&sidecar_path(p))?;
        }
    }
    let cfg = || cfg.expect("checked above");

    match cmd {
        Command::Calibrate => {
            let c = cfg();
            let cal = m.timed("calibrate", || {
                calibrate_dipole_slope(
                    c.target_rabi_cm,
                    &c.cavity()?,
                    &c.morse()?,
                    &c.dipole()?,
                    &c.grid()?,
                    &c.solver,
                )
                .stage("calibrate")
            })?;
            let text = format!(
                "#POLDQC-CALIBRATION v1\ntarget_rabi_cm = {:?}\nslope_au = {:?}\nrabi_cm = {:?}\nevaluations = {}\n",
                c.target_rabi_cm, cal.dipole.slope().unwrap_or(f64::NAN), cal.rabi_cm, cal.evaluations
            );
            write_text(&out, &text)?;
            m.output(&out)?;
        }
        Command::Surface => {
            let c = cfg();
            let s = m.timed("surface", || {
                build_surface_set_with(c.grid()?, &c.morse()?, &c.dipole()?, &c.cavity()?, c.variant, c.scf)
                    .stage("surface")
            })?;
            save_surface_set(&s, &out).stage("write surface")?;
            m.output(&out)?;
        }
        Command::Solve => {
            let c = cfg();
            let s = load_surface_set(&req.inputs[0]).stage("read surface")?;
            let eig = m.timed("solve", || relax_eigenstates(&s, &c.solver).stage("solve"))?;
            save_eigen_solution(&eig, &out).stage("write eigen")?;
            let wf = sidecar_path(&out);
            save_wavefunctions(&eig.states, &wf).stage("write wavefunctions")?;
            m.output(&out)?;
            m.output(&wf)?;
        }
        Command::Decompose => {
            let c = cfg();
            let mut eig = load_eigen_solution(&req.inputs[0]).stage("read eigen")?;
            let grid = eig
                .grid
                .clone()
                .ok_or_else(|| CliError::Validation("eigen file carries no grid axes".into()))?;
            eig.states = load_wavefunctions(sidecar_path(&req.inputs[0]), grid.clone()).stage("read wavefunctions")?;
            let table = m.timed("decompose", || {
                let basis = build_bare_basis(c.n_mol, c.basis_max_vib, c.basis_max_photon, &grid, &c.morse()?, &c.cavity()?)
                    .stage("bare basis")?;
                decompose(&eig, &basis).stage("decompose")
            })?;
            table.save_tsv(&out).stage("write decomposition")?;
            m.output(&out)?;
        }
        Command::Spectrum => {
            let c = cfg();
            let eig = load_eigen_solution(&req.inputs[0]).stage("read eigen")?;
            let s = m.timed("spectrum", || {
                let raw = compute_dqc(&eig, c.gamma_cm, c.omega2, c.omega3).stage("spectrum")?;
                normalize_spectrum(&raw).stage("normalize")
            })?;
            save_spectrum(&s, &out).stage("write spectrum")?;
            m.output(&out)?;
            if !req.channels.is_empty() {
                let ch = spectrum_channels(&s).stage("channels")?;
                for name in &req.channels {
                    let p = channel_path(&out, name);
                    save_real_map(ch.get(name).expect("validated channel"), &p).stage("write channel")?;
                    m.output(&p)?;
                }
            }
        }
        Command::Diff => {
            let a = load_spectrum(&req.inputs[0]).stage("read spectrum")?;
            let b = load_spectrum(&req.inputs[1]).stage("read spectrum")?;
            let d = m.timed("diff", || difference_spectrum(&a, &b).stage("diff"))?;
            save_real_map(&d, &out).stage("write diff")?;
            m.output(&out)?;
        }
        Command::Peaks => {
            let threshold = req.threshold.or(req.config.as_ref().map(|c| c.threshold)).unwrap_or(0.1);
            let s = load_spectrum(&req.inputs[0]).stage("read spectrum")?;
            let mut peaks = find_peaks(&s, threshold).stage("peaks")?;
            let resonances = omega2_resonances(&s, threshold).stage("peaks")?;
            if let Some(p) = req.inputs.get(1) {
                let eig = load_eigen_solution(p).stage("read eigen")?;
                assign_peaks(&mut peaks, &eig, Some(&manifold_labels(&eig))).stage("assign peaks")?;
            }
            let mut text = format!("#POLDQC-PEAKS v1\n#threshold {threshold}\nkind\tomega2_cm\tomega3_cm\tmagnitude\tassignment\n");
            for p in &peaks {
                let _ = writeln!(
                    text,
                    "peak\t{:.4}\t{:.4}\t{:.6}\t{}",
                    p.omega2,
                    p.omega3,
                    p.magnitude,
                    p.assignment.as_deref().unwrap_or("-")
                );
            }
            for (w2, mag) in &resonances {
                let _ = writeln!(text, "resonance\t{w2:.4}\t-\t{mag:.6}\t-");
            }
            write_text(&out, &text)?;
            m.output(&out)?;
        }
    }
    m.save(&out)
}
