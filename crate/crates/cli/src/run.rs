use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub graph: Option<PathBuf>,
    pub config_path: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub seed: u64,
    pub config_hash: Option<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub artifacts: Vec<String>,
    pub git_describe: String,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            graph: None,
            config_path: None,
            overrides: Vec::new(),
            seed,
            config_hash: None,
            started_unix: now(),
            finished_unix: 0,
            artifacts: Vec::new(),
            git_describe: option_env!("ASGL_GIT_DESCRIBE").unwrap_or("unknown").to_string(),
        }
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// A freshly created `run-NNNN` directory under `base`. Existing runs are
/// never reused.
pub struct RunDir {
    pub path: PathBuf,
    pub manifest: RunManifest,
}

impl RunDir {
    pub fn create(base: &Path, manifest: RunManifest) -> Result<Self> {
        fs::create_dir_all(base).with_context(|| format!("creating {}", base.display()))?;
        for i in 0..100_000 {
            let path = base.join(format!("run-{i:04}"));
            match fs::create_dir(&path) {
                Ok(()) => return Ok(RunDir { path, manifest }),
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(e).with_context(|| format!("creating {}", path.display())),
            }
        }
        bail!("no free run directory under {}", base.display())
    }

    /// Creates `name` inside the run and records it as an artifact.
    pub fn artifact(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.path.join(name);
        let file = File::options()
            .write(true)
            .create_new(true)
            .open(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        self.manifest.artifacts.push(name.to_string());
        Ok(BufWriter::new(file))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut w = self.artifact(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.manifest.finished_unix = now();
        self.manifest.artifacts.push(MANIFEST.to_string());
        let path = self.path.join(MANIFEST);
        let file = File::options().write(true).create_new(true).open(&path)?;
        let mut w = BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, &self.manifest)?;
        writeln!(w)?;
        w.flush()?;
        Ok(self.path)
    }
}
