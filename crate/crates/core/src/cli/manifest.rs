//! Run manifests: what was run, on which inputs, producing which outputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub command: String,
    /// Arguments after the program name, as given.
    pub args: Vec<String>,
    pub cwd: PathBuf,
    pub config: RunConfig,
    pub seed: u64,
    /// sha256 of every file or directory read.
    pub inputs: BTreeMap<String, String>,
    /// sha256 of every file written, keyed by name within the output directory.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Hash over the sorted relative paths and contents of every file under `dir`.
pub fn hash_dir(dir: &Path) -> Result<String, CliError> {
    fn walk(dir: &Path, base: &Path, acc: &mut Vec<(String, PathBuf)>) -> Result<(), CliError> {
        for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
            let path = entry.map_err(|e| io_err(dir, e))?.path();
            if path.is_dir() {
                walk(&path, base, acc)?;
            } else {
                let rel = path.strip_prefix(base).unwrap_or(&path).to_string_lossy().replace('\\', "/");
                acc.push((rel, path));
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, dir, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for (rel, path) in files {
        h.update(rel.as_bytes());
        h.update([0]);
        h.update(fs::read(&path).map_err(|e| io_err(&path, e))?);
        h.update([0]);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn hash_path(path: &Path) -> Result<String, CliError> {
    if path.is_dir() {
        hash_dir(path)
    } else {
        Ok(sha256_hex(&fs::read(path).map_err(|e| io_err(path, e))?))
    }
}

/// Collects inputs and outputs while a command runs.
#[derive(Debug, Default)]
pub struct Recorder {
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    out: Option<PathBuf>,
}

impl Recorder {
    pub fn new(out: Option<PathBuf>) -> Self {
        Self {
            out,
            ..Default::default()
        }
    }

    pub fn set_out(&mut self, out: Option<PathBuf>) {
        self.out = out;
    }

    pub fn out_dir(&self) -> Option<&Path> {
        self.out.as_deref()
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let h = hash_path(path)?;
        self.inputs.insert(path.display().to_string(), h);
        Ok(())
    }

    pub fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        String::from_utf8(bytes).map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))
    }

    /// Writes `name` into the output directory, if there is one.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let Some(dir) = &self.out else { return Ok(()) };
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Writes the manifest last, beside the outputs.
    pub fn finish(self, command: &str, args: &[String], config: &RunConfig) -> Result<(), CliError> {
        let Some(dir) = self.out.clone() else { return Ok(()) };
        let m = Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            args: args.to_vec(),
            cwd: std::env::current_dir().map_err(|e| CliError::Internal(e.to_string()))?,
            config: config.clone(),
            seed: config.model.seed,
            inputs: self.inputs,
            outputs: self.outputs,
        };
        let s = serde_json::to_string_pretty(&m).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
        let path = dir.join(MANIFEST_FILE);
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        fs::write(&path, s).map_err(|e| io_err(&path, e))
    }
}

pub fn load(path: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// `args` with `--out` pointed at `out` and `--threads` forced when given.
pub fn rewrite_args(args: &[String], out: &Path, threads: Option<usize>) -> Vec<String> {
    let mut res = Vec::with_capacity(args.len() + 4);
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--out" || (a == "--threads" && threads.is_some()) {
            it.next();
        } else if a.starts_with("--out=") || (a.starts_with("--threads=") && threads.is_some()) {
        } else {
            res.push(a.clone());
        }
    }
    res.push("--out".into());
    res.push(out.display().to_string());
    if let Some(t) = threads {
        res.push("--threads".into());
        res.push(t.to_string());
    }
    res
}
