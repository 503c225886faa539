//! Run manifest: config hash, tool version, timestamps and the produced
//! files. The manifest carries the only non-reproducible bytes of a run
//! (timestamps); every CSV is byte-identical across reruns of the same
//! config and version.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config_sha256: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Serialize)]
pub struct OutputRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub struct ManifestBuilder {
    command: String,
    config_sha256: String,
    started: u128,
    outputs: Vec<OutputRecord>,
}

impl ManifestBuilder {
    pub fn new(command: &str, config_bytes: &[u8]) -> Self {
        Self {
            command: command.to_string(),
            config_sha256: sha256_hex(config_bytes),
            started: now_ms(),
            outputs: Vec::new(),
        }
    }

    /// Write a produced file and record it.
    pub fn emit(&mut self, dir: &Path, name: &str, contents: &[u8]) -> anyhow::Result<PathBuf> {
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        self.outputs.push(OutputRecord {
            name: name.to_string(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    pub fn finish(self, dir: &Path) -> anyhow::Result<PathBuf> {
        let manifest = RunManifest {
            tool: "toa-kg".into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: self.command,
            config_sha256: self.config_sha256,
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
            outputs: self.outputs,
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }
}
