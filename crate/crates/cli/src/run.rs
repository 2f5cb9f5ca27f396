use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
}

/// Record of one invocation, written as `manifest.json` in the output
/// directory whether the run succeeds or not.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command_line: Vec<String>,
    /// SHA-256 over the digests of every config input, in read order.
    pub config_hash: Option<String>,
    pub inputs: Vec<InputDigest>,
    pub seed: u64,
    pub threads: usize,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<String>,
    pub status: String,
    pub exit_code: i32,
    pub error: Option<String>,
}

pub struct Run {
    pub out: PathBuf,
    pub seed: u64,
    manifest: RunManifest,
}

impl Run {
    pub fn new(out: PathBuf, seed: u64, command_line: Vec<String>) -> Self {
        Run {
            out,
            seed,
            manifest: RunManifest {
                tool: "robinucq",
                version: env!("CARGO_PKG_VERSION"),
                command_line,
                config_hash: None,
                inputs: Vec::new(),
                seed,
                threads: rayon::current_num_threads(),
                stages: Vec::new(),
                outputs: Vec::new(),
                status: "running".into(),
                exit_code: 0,
                error: None,
            },
        }
    }

    /// Reads an input file and records its digest.
    pub fn read_input(&mut self, path: &Path) -> Result<String> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let digest = hex::encode(Sha256::digest(text.as_bytes()));
        self.manifest.inputs.push(InputDigest { path: path.display().to_string(), sha256: digest });
        let mut h = Sha256::new();
        for i in &self.manifest.inputs {
            h.update(i.sha256.as_bytes());
        }
        self.manifest.config_hash = Some(hex::encode(h.finalize()));
        Ok(text)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.manifest.seed = seed;
    }

    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let value = f();
        self.manifest.stages.push(StageTiming { name: name.into(), seconds: start.elapsed().as_secs_f64() });
        value
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        fs::create_dir_all(&self.out).with_context(|| format!("cannot create {}", self.out.display()))?;
        let path = self.out.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        self.manifest.outputs.push(name.into());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, &(text + "\n"))
    }

    pub fn finish(mut self, exit_code: i32, error: Option<String>) -> Result<()> {
        self.manifest.status = if exit_code == 0 { "ok" } else { "error" }.into();
        self.manifest.exit_code = exit_code;
        self.manifest.error = error;
        fs::create_dir_all(&self.out).with_context(|| format!("cannot create {}", self.out.display()))?;
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        fs::write(self.out.join("manifest.json"), text).context("cannot write manifest")?;
        Ok(())
    }
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}
