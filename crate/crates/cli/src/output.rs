//! Input hashing, atomic output writes and provenance sidecars.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;
use hsreg_bench::report::write_atomic;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

fn digest(path: &Path, bytes: &[u8]) -> FileDigest {
    FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Serialize)]
pub struct Provenance<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub seed: Option<u64>,
    /// Every option with defaults filled in.
    pub config: &'a serde_json::Value,
    pub inputs: &'a [FileDigest],
    pub outputs: &'a [FileDigest],
}

/// Collects inputs read and outputs produced by one command. Outputs are
/// held in memory and written only once the command has succeeded.
pub struct Run {
    command: &'static str,
    inputs: Vec<FileDigest>,
    outputs: Vec<(PathBuf, Vec<u8>)>,
}

impl Run {
    pub fn new(command: &'static str) -> Self {
        Self {
            command,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        self.inputs.push(digest(path, &bytes));
        Ok(bytes)
    }

    pub fn read_text(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = self.read(path)?;
        String::from_utf8(bytes).map_err(|_| CliError::parse(format!("{}: not valid UTF-8", path.display())))
    }

    pub fn output(&mut self, path: PathBuf, bytes: impl Into<Vec<u8>>) {
        self.outputs.push((path, bytes.into()));
    }

    /// Writes every output, then one `<output>.provenance.json` beside each.
    pub fn finish(self, seed: Option<u64>, config: &serde_json::Value) -> Result<Vec<PathBuf>, CliError> {
        let out_digests: Vec<FileDigest> = self.outputs.iter().map(|(p, b)| digest(p, b)).collect();
        let prov = Provenance {
            tool: "hsreg",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed,
            config,
            inputs: &self.inputs,
            outputs: &out_digests,
        };
        let mut sidecar = serde_json::to_string_pretty(&prov)?;
        sidecar.push('\n');
        let mut written = Vec::new();
        for (path, bytes) in &self.outputs {
            write_atomic(path, bytes)?;
            written.push(path.clone());
        }
        for (path, _) in &self.outputs {
            let side = sidecar_path(path);
            write_atomic(&side, sidecar.as_bytes())?;
            written.push(side);
        }
        Ok(written)
    }
}

pub fn sidecar_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}
