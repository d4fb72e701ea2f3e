use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Record of one command: configuration, file digests and stage timings.
#[derive(Debug, Default)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<String>,
    pub settings: Vec<(String, String)>,
    pub inputs: Vec<(PathBuf, String)>,
    pub outputs: Vec<(PathBuf, String)>,
    pub stages: Vec<(String, f64)>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            ..Default::default()
        }
    }

    pub fn setting(&mut self, key: &str, value: impl ToString) {
        self.settings.push((key.to_string(), value.to_string()));
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let d = sha256_file(path)?;
        self.inputs.push((path.to_path_buf(), d));
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<(), CliError> {
        let d = sha256_file(path)?;
        self.outputs.push((path.to_path_buf(), d));
        Ok(())
    }

    /// Run `f` and record its wall-clock time under `name`.
    pub fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
        let t = Instant::now();
        let out = f()?;
        self.stages.push((name.to_string(), t.elapsed().as_secs_f64()));
        Ok(out)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "#POLDQC-MANIFEST v1");
        let _ = writeln!(s, "tool = poldqc {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "command = {}", self.command);
        for (k, v) in &self.settings {
            let _ = writeln!(s, "{k} = {v}");
        }
        for (p, d) in &self.inputs {
            let _ = writeln!(s, "input {} sha256 {d}", p.display());
        }
        for (p, d) in &self.outputs {
            let _ = writeln!(s, "output {} sha256 {d}", p.display());
        }
        for (name, secs) in &self.stages {
            let _ = writeln!(s, "stage {name} seconds {secs:.3}");
        }
        if let Some(c) = &self.config {
            let _ = writeln!(s, "#config");
            s.push_str(c);
        }
        s
    }

    /// Manifest path for a primary output: `<out>.manifest`.
    pub fn path_for(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_os_string();
        s.push(".manifest");
        PathBuf::from(s)
    }

    pub fn save(&self, out: &Path) -> Result<PathBuf, CliError> {
        let p = Self::path_for(out);
        std::fs::write(&p, self.to_text()).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }
}
