use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::SUMMARY_FORMAT;
use crate::error::CliError;

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
}

/// Files written by one run, in write order.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(OutputFile {
            path: name.to_string(),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Renders CSV through `f` into memory and writes it.
    pub fn write_csv(&mut self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        f(&mut buf).map_err(|e| CliError::Runtime(e.to_string()))?;
        self.write(name, &buf)
    }
}

/// Written last as `run_summary.json`. It is the only output that carries
/// wall-clock time and the worker count; every other file is a pure
/// function of the config and seed.
#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub format: &'static str,
    pub operation: String,
    pub config: serde_json::Value,
    pub workers: usize,
    pub duration_seconds: f64,
    pub outputs: Vec<OutputFile>,
}

pub fn finish(
    mut outputs: Outputs,
    operation: &str,
    config: serde_json::Value,
    workers: usize,
    started: Instant,
) -> Result<RunSummary, CliError> {
    if let Some(f) = outputs.files.iter().find(|f| f.bytes == 0) {
        return Err(CliError::Runtime(format!("output {} is empty", f.path)));
    }
    let summary = RunSummary {
        format: SUMMARY_FORMAT,
        operation: operation.to_string(),
        config,
        workers,
        duration_seconds: started.elapsed().as_secs_f64(),
        outputs: outputs.files.clone(),
    };
    outputs.write_json("run_summary.json", &summary)?;
    Ok(summary)
}
