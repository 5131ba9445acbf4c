use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Crate version plus the source revision when the build provides one.
pub fn version_string() -> String {
    match option_env!("POINDP_GIT_REV") {
        Some(rev) => format!("{}-g{rev}", env!("CARGO_PKG_VERSION")),
        None => env!("CARGO_PKG_VERSION").to_string(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputFile {
    /// Relative to the run directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one command invocation, written last and atomically.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub run_name: String,
    pub version: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub timings: Vec<StageTiming>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn output(&self, rel: &str) -> Option<&OutputFile> {
        self.outputs.iter().find(|o| o.path == rel)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes `contents` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Collects outputs and stage timings while a command runs.
pub(crate) struct RunRecorder {
    dir: PathBuf,
    outputs: Vec<OutputFile>,
    timings: Vec<StageTiming>,
}

impl RunRecorder {
    pub(crate) fn new(dir: PathBuf) -> Self {
        Self {
            dir,
            outputs: Vec::new(),
            timings: Vec::new(),
        }
    }

    pub(crate) fn write(&mut self, rel: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let bytes = contents.as_ref();
        let path = self.dir.join(rel);
        write_atomic(&path, bytes)?;
        self.outputs.retain(|o| o.path != rel);
        self.outputs.push(OutputFile {
            path: rel.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub(crate) fn time<T>(&mut self, stage: impl Into<String>, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.timings.push(StageTiming {
            stage: stage.into(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    pub(crate) fn finish(
        mut self,
        command: &str,
        run_name: &str,
        config_hash: String,
        seeds: Vec<u64>,
    ) -> Result<RunManifest> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = RunManifest {
            command: command.to_string(),
            run_name: run_name.to_string(),
            version: version_string(),
            config_hash,
            seeds,
            timings: self.timings,
            outputs: self.outputs,
        };
        let text = toml::to_string(&manifest).map_err(|e| Error::Numeric(format!("manifest: {e}")))?;
        write_atomic(&self.dir.join(format!("manifest_{command}.toml")), text.as_bytes())?;
        Ok(manifest)
    }
}
