//! Run directories and their manifests.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Component, Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use ucplab::ucpf::{self, UcpfField};

pub const RUNS_ENV: &str = "UCPLAB_RUNS";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// An instance that errored; the rest of the run went on without it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub lambda: Option<f64>,
    pub seed: Option<u64>,
    pub n: Option<usize>,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub timestamp: String,
    pub command: String,
    pub args: Vec<String>,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub grid_sizes: Vec<usize>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub failures: Vec<Failure>,
}

pub fn digest(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

pub struct RunDir {
    dir: PathBuf,
    run_id: String,
    command: String,
    timestamp: String,
    outputs: BTreeSet<String>,
    inputs: Vec<PathBuf>,
    failures: Vec<Failure>,
}

impl RunDir {
    /// `out` if given, else `$UCPLAB_RUNS/<run_id>` or `runs/<run_id>`.
    pub fn create(out: Option<&Path>, command: &str) -> Result<Self> {
        let now = Utc::now();
        let timestamp = now.to_rfc3339_opts(SecondsFormat::Millis, true);
        let stamp = now.format("%Y%m%dT%H%M%S%3fZ").to_string();
        let dir = match out {
            Some(p) => p.to_path_buf(),
            None => {
                let root = std::env::var_os(RUNS_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"));
                let base = format!("{command}-{stamp}");
                let mut dir = root.join(&base);
                let mut k = 2;
                while dir.exists() {
                    dir = root.join(format!("{base}-{k}"));
                    k += 1;
                }
                dir
            }
        };
        if dir.join(MANIFEST).exists() {
            bail!("{} already holds a run", dir.display());
        }
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let run_id = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| format!("{command}-{stamp}"));
        Ok(RunDir {
            dir,
            run_id,
            command: command.to_string(),
            timestamp,
            outputs: BTreeSet::new(),
            inputs: vec![],
            failures: vec![],
        })
    }

    /// Resolve a relative output name, refusing anything that escapes the run.
    fn target(&mut self, name: &str) -> Result<PathBuf> {
        let rel = Path::new(name);
        if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            bail!("output name {name:?} must stay inside the run directory");
        }
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        self.outputs.insert(name.to_string());
        Ok(path)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.target(name)?;
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write_bytes(name, s.as_bytes())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
        self.write_bytes(name, &bytes)
    }

    pub fn save_field(&mut self, name: &str, f: &UcpfField) -> Result<PathBuf> {
        let path = self.target(name)?;
        ucpf::save(&path, f)?;
        Ok(path)
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    pub fn fail(&mut self, lambda: Option<f64>, seed: Option<u64>, n: Option<usize>, error: impl ToString) {
        self.failures.push(Failure { lambda, seed, n, error: error.to_string() });
    }

    pub fn failures(&self) -> &[Failure] {
        &self.failures
    }

    /// Digest every input and output and write the manifest.
    pub fn finish(self, config: serde_json::Value, seeds: Vec<u64>, grid_sizes: Vec<usize>) -> Result<PathBuf> {
        let inputs = self.inputs.iter().map(|p| digest(p)).collect::<Result<Vec<_>>>()?;
        let outputs = self
            .outputs
            .iter()
            .map(|name| {
                let mut d = digest(&self.dir.join(name))?;
                d.path = name.clone();
                Ok(d)
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            run_id: self.run_id,
            timestamp: self.timestamp,
            command: self.command,
            args: std::env::args().collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            seeds,
            grid_sizes,
            inputs,
            outputs,
            failures: self.failures,
        };
        let path = self.dir.join(MANIFEST);
        fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(self.dir)
    }
}

pub fn load_manifest(dir: &Path) -> Result<RunManifest> {
    let path = dir.join(MANIFEST);
    let s = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&s)?)
}

/// Shortest round-trip form, exponential when very large or small; `None`
/// is an empty cell.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_names_cannot_escape_the_run() {
        let t = tempfile::TempDir::new().unwrap();
        let mut run = RunDir::create(Some(&t.path().join("r")), "test").unwrap();
        for bad in ["../x.csv", "/etc/x", "a/../../x", "./x"] {
            assert!(run.write_bytes(bad, b"x").is_err(), "{bad}");
        }
        run.write_bytes("sub/x.csv", b"1\n").unwrap();
        let dir = run.finish(serde_json::Value::Null, vec![], vec![]).unwrap();
        let m = load_manifest(&dir).unwrap();
        assert_eq!(m.outputs.len(), 1);
        assert_eq!(m.outputs[0].path, "sub/x.csv");
        assert_eq!(m.outputs[0].bytes, 2);
        assert!(RunDir::create(Some(&dir), "test").is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 2.0, 1.3122091924984588e22, 5e-324, -7.25, f64::MAX] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert!(num(1e22).len() < 10);
        assert_eq!(opt(None), "");
    }
}
