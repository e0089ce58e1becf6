//! Run manifest: config echo, seed, timestamps and sha256 of every input
//! and output. Timestamps appear here and nowhere else.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub seed: Option<u64>,
    pub config: RunConfig,
    pub started_at: String,
    pub finished_at: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

fn now() -> String {
    chrono::DateTime::<chrono::Utc>::from(std::time::SystemTime::now()).to_rfc3339()
}

/// Digest of a file, or of a directory as the sorted list of its files'
/// relative paths and digests.
pub fn digest(path: &Path) -> Result<FileDigest, CliError> {
    let meta = std::fs::metadata(path).map_err(CliError::io(path))?;
    let (sha, bytes) = if meta.is_dir() {
        let mut files = Vec::new();
        collect_files(path, path, &mut files)?;
        files.sort();
        let mut h = Sha256::new();
        let mut total = 0;
        for rel in files {
            let d = digest(&path.join(&rel))?;
            h.update(format!("{} {}\n", rel.display(), d.sha256));
            total += d.bytes;
        }
        (hex::encode(h.finalize()), total)
    } else {
        let data = std::fs::read(path).map_err(CliError::io(path))?;
        (hex::encode(Sha256::digest(&data)), data.len() as u64)
    };
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha,
        bytes,
    })
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
    for entry in std::fs::read_dir(dir).map_err(CliError::io(dir))? {
        let entry = entry.map_err(CliError::io(dir))?;
        let p = entry.path();
        if p.is_dir() {
            collect_files(root, &p, out)?;
        } else {
            out.push(p.strip_prefix(root).expect("under root").to_path_buf());
        }
    }
    Ok(())
}

/// Tracks one command's inputs and outputs.
#[derive(Debug)]
pub struct RunContext {
    pub command: String,
    pub args: Vec<String>,
    pub config: RunConfig,
    pub output: PathBuf,
    started_at: String,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl RunContext {
    pub fn new(command: &str, args: Vec<String>, config: RunConfig) -> Result<Self, CliError> {
        let output = config.paths.output.clone();
        std::fs::create_dir_all(&output).map_err(CliError::io(&output))?;
        Ok(Self {
            command: command.to_string(),
            args,
            config,
            output,
            started_at: now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    /// Records an input; its digest is taken when the run finishes.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        if !path.exists() {
            return Err(CliError::Io {
                path: path.display().to_string(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file or directory"),
            });
        }
        if !self.inputs.iter().any(|p| p == path) {
            self.inputs.push(path.to_path_buf());
        }
        Ok(())
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.output.join(name)
    }

    /// Output path for `name`, refusing any file already read as an input.
    pub fn target(&self, name: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let resolved = self.output.canonicalize().map(|d| d.join(name)).unwrap_or_else(|_| path.clone());
        if self.inputs.iter().any(|p| p.canonicalize().is_ok_and(|p| p == resolved)) {
            return Err(CliError::Config(format!("refusing to overwrite input {}", path.display())));
        }
        Ok(path)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let path = self.target(name)?;
        std::fs::write(&path, contents).map_err(CliError::io(&path))?;
        self.record_output(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable report");
        text.push('\n');
        self.write(name, text)
    }

    /// For files produced by a library call rather than [`RunContext::write`].
    pub fn record_output(&mut self, path: PathBuf) {
        if !self.outputs.contains(&path) {
            self.outputs.push(path);
        }
    }

    pub fn finish(self) -> Result<Manifest, CliError> {
        let inputs = self.inputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?;
        let outputs = self.outputs.iter().map(|p| digest(p)).collect::<Result<_, _>>()?;
        let manifest = Manifest {
            tool: "nint".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command,
            args: self.args,
            seed: self.config.seed,
            config: self.config,
            started_at: self.started_at,
            finished_at: now(),
            inputs,
            outputs,
        };
        let path = self.output.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
        text.push('\n');
        std::fs::write(&path, text).map_err(CliError::io(&path))?;
        Ok(manifest)
    }
}
