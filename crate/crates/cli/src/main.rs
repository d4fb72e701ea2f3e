use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use poldqc_cli::config::{Preset, RunConfig};
use poldqc_cli::pipeline::{self, Command, Request};
use poldqc_cli::CliError;
use poldqc_core::model::SurfaceVariant;

#[derive(Parser)]
#[command(name = "poldqc", version, about = "Double-quantum-coherence spectra of vibrational polaritons")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit the dipole slope to the target Rabi splitting.
    Calibrate(Common),
    /// Tabulate the cavity potential and dipole surfaces.
    Surface(Common),
    /// Relax the lowest coupled eigenstates of a surface file.
    Solve(Common),
    /// Project eigenstates onto the bare |v,n> basis.
    Decompose(Common),
    /// Evaluate the normalized DQC spectrum of an eigen file.
    Spectrum(Common),
    /// Difference of two normalized |S| maps.
    Diff(Common),
    /// Local maxima and Omega2 resonances of a spectrum file.
    Peaks(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Full,
    Linear,
    Etc,
    Free,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Paper,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Comma-separated subset of re,im,abs.
    #[arg(long, value_delimiter = ',')]
    channels: Vec<String>,
    #[arg(long)]
    threshold: Option<f64>,
    /// Input file; repeat for commands that take two.
    #[arg(long)]
    input: Vec<PathBuf>,
}

fn request(cmd: Command, a: Common) -> Result<Request, CliError> {
    let mut settings = Vec::new();
    let mut config = match &a.config {
        Some(p) => Some(RunConfig::load(p)?),
        None => None,
    };
    if let Some(c) = config.as_mut() {
        if let Some(v) = a.variant {
            c.variant = match v {
                VariantArg::Full => SurfaceVariant::Full,
                VariantArg::Linear => SurfaceVariant::Linear,
                VariantArg::Etc => SurfaceVariant::Etc,
                VariantArg::Free => SurfaceVariant::FieldFree,
            };
        }
        if let Some(p) = a.preset {
            let p = match p {
                PresetArg::Desk => Preset::Desk,
                PresetArg::Paper => Preset::Paper,
            };
            c.apply_preset(p);
            settings.push(("preset".to_string(), format!("{p:?}").to_lowercase()));
        }
        if cmd == Command::Surface {
            settings.push(("variant".to_string(), c.variant.to_string()));
        }
    } else if a.variant.is_some() || a.preset.is_some() {
        return Err(CliError::Usage("--variant and --preset need --config".into()));
    }
    if let Some(p) = &a.config {
        settings.push(("config_path".to_string(), p.display().to_string()));
    }
    if let Some(t) = a.threshold {
        if !(t > 0.0 && t < 1.0) {
            return Err(CliError::Validation(format!("threshold must lie in (0, 1), got {t}")));
        }
        settings.push(("threshold".to_string(), t.to_string()));
    }
    Ok(Request {
        command: cmd,
        config,
        inputs: a.input,
        out: a.out,
        channels: a.channels,
        threshold: a.threshold,
        settings,
    })
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("POLDQC_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Usage(format!("POLDQC_THREADS must be a positive integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, args) = match cli.command {
        Cmd::Calibrate(a) => (Command::Calibrate, a),
        Cmd::Surface(a) => (Command::Surface, a),
        Cmd::Solve(a) => (Command::Solve, a),
        Cmd::Decompose(a) => (Command::Decompose, a),
        Cmd::Spectrum(a) => (Command::Spectrum, a),
        Cmd::Diff(a) => (Command::Diff, a),
        Cmd::Peaks(a) => (Command::Peaks, a),
    };
    let result = init_threads().and_then(|_| request(cmd, args)).and_then(|r| pipeline::run(&r));
    match result {
        Ok(manifest) => {
            eprintln!("poldqc {}: wrote {}", cmd.name(), manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("poldqc {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
