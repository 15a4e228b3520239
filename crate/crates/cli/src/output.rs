use std::path::{Path, PathBuf};
use std::time::Instant;

use invsig::datasets::{write_atomic, FORMAT_VERSION};
use invsig::nn::CHECKPOINT_VERSION;
use invsig::{Error, Result};
use serde::Serialize;

#[derive(Debug, Serialize)]
struct Versions {
    invsig: &'static str,
    curve_format: u32,
    checkpoint_format: u32,
}

/// What produced a set of artifacts, enough to rerun the command.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    command: String,
    config: serde_json::Value,
    seed: u64,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    versions: Versions,
    wall_clock_seconds: f64,
}

pub struct Run {
    command: &'static str,
    started: Instant,
}

impl Run {
    pub fn start(command: &'static str) -> Self {
        Self {
            command,
            started: Instant::now(),
        }
    }

    pub fn finish(
        &self,
        manifest_path: &Path,
        config: impl Serialize,
        seed: u64,
        inputs: &[&Path],
        outputs: &[&Path],
    ) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.into(),
            config: serde_json::to_value(config).map_err(|e| Error::InvalidArgument(e.to_string()))?,
            seed,
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            outputs: outputs.iter().map(|p| p.to_path_buf()).collect(),
            versions: Versions {
                invsig: env!("CARGO_PKG_VERSION"),
                curve_format: FORMAT_VERSION,
                checkpoint_format: CHECKPOINT_VERSION,
            },
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        write_atomic(manifest_path, text.as_bytes())
    }
}

/// `<path>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Replaces the extension of `path`.
pub fn sibling(path: &Path, extension: &str) -> PathBuf {
    path.with_extension(extension)
}

/// Header plus rows, written atomically.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv: {e}")))?;
    write_atomic(path, &bytes)
}

pub fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.exists() => Err(Error::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "output directory does not exist"),
        }),
        _ => Ok(()),
    }
}
