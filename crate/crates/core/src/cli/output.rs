//! Stage directories, manifests and file writers.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

fn runtime(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = fs::read(path).map_err(|e| runtime(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn sha256_str(s: &str) -> String {
    hex::encode(Sha256::digest(s.as_bytes()))
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    seed: u64,
    config_hash: String,
    options: &'a serde_json::Value,
    versions: Versions,
    inputs: &'a [FileDigest],
    outputs: Vec<FileDigest>,
}

#[derive(Debug, Serialize)]
struct Versions {
    typedmood: &'static str,
    artifact_format: u32,
}

/// A stage being written. Files go to a hidden staging directory that
/// replaces `<run>/<name>` on [`Stage::commit`]; dropping an uncommitted
/// stage removes everything it wrote.
pub struct Stage {
    pub run: PathBuf,
    pub name: &'static str,
    staging: PathBuf,
    created_run: bool,
    committed: bool,
    inputs: Vec<FileDigest>,
}

impl Stage {
    pub fn begin(run: &Path, name: &'static str) -> CliResult<Stage> {
        let created_run = !run.exists();
        fs::create_dir_all(run).map_err(|e| runtime(run, e))?;
        let staging = run.join(format!(".{name}.partial"));
        if staging.exists() {
            fs::remove_dir_all(&staging).map_err(|e| runtime(&staging, e))?;
        }
        fs::create_dir_all(&staging).map_err(|e| runtime(&staging, e))?;
        Ok(Stage { run: run.to_path_buf(), name, staging, created_run, committed: false, inputs: Vec::new() })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.staging.join(rel)
    }

    pub fn dir(&self, rel: &str) -> CliResult<PathBuf> {
        let p = self.path(rel);
        fs::create_dir_all(&p).map_err(|e| runtime(&p, e))?;
        Ok(p)
    }

    /// Record an input file; paths inside the run directory are stored
    /// relative to it so manifests do not depend on where the run lives.
    pub fn input(&mut self, path: &Path) -> CliResult<()> {
        let shown = path
            .strip_prefix(&self.run)
            .map(|p| p.to_string_lossy().to_string())
            .unwrap_or_else(|_| path.file_name().map_or_else(String::new, |f| f.to_string_lossy().to_string()));
        let sha256 = if path.is_dir() { dir_digest(path)? } else { sha256_file(path)? };
        self.inputs.push(FileDigest { path: shown, sha256 });
        Ok(())
    }

    pub fn write_text(&self, rel: &str, text: &str) -> CliResult<()> {
        let p = self.path(rel);
        fs::write(&p, text).map_err(|e| runtime(&p, e))
    }

    pub fn write_json<T: Serialize>(&self, rel: &str, value: &T) -> CliResult<()> {
        let s = serde_json::to_string_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        self.write_text(rel, &(s + "\n"))
    }

    pub fn write_csv<T: Serialize>(&self, rel: &str, rows: &[T]) -> CliResult<()> {
        write_csv(&self.path(rel), rows)
    }

    pub fn commit<O: Serialize>(mut self, seed: u64, options: &O) -> CliResult<PathBuf> {
        let options = serde_json::to_value(options).map_err(|e| CliError::Runtime(e.to_string()))?;
        let canonical = serde_json::to_string(&options).expect("json value");
        let outputs = list_files(&self.staging)?
            .into_iter()
            .map(|p| {
                Ok(FileDigest {
                    path: p.strip_prefix(&self.staging).expect("inside").to_string_lossy().replace('\\', "/"),
                    sha256: sha256_file(&p)?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let m = Manifest {
            command: self.name,
            seed,
            config_hash: sha256_str(&format!("{}:{seed}:{canonical}", self.name)),
            options: &options,
            versions: Versions { typedmood: env!("CARGO_PKG_VERSION"), artifact_format: crate::artifact::FORMAT_VERSION },
            inputs: &self.inputs,
            outputs,
        };
        self.write_json(MANIFEST, &m)?;
        let dest = self.run.join(self.name);
        if dest.exists() {
            fs::remove_dir_all(&dest).map_err(|e| runtime(&dest, e))?;
        }
        fs::rename(&self.staging, &dest).map_err(|e| runtime(&dest, e))?;
        self.committed = true;
        Ok(dest)
    }
}

impl Drop for Stage {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        let _ = fs::remove_dir_all(&self.staging);
        if self.created_run {
            // only removes the run directory if nothing else is in it
            let _ = fs::remove_dir(&self.run);
        }
    }
}

/// Regular files under `dir`, sorted.
pub fn list_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).map_err(|e| runtime(&d, e))? {
            let p = e.map_err(|e| runtime(&d, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

fn dir_digest(dir: &Path) -> CliResult<String> {
    let mut h = Sha256::new();
    for p in list_files(dir)? {
        h.update(p.strip_prefix(dir).expect("inside").to_string_lossy().as_bytes());
        h.update(sha256_file(&p)?.as_bytes());
    }
    Ok(hex::encode(h.finalize()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| runtime(path, e))
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}
