//! Run provenance. Every command appends one record to `manifest.jsonl` in
//! its output directory: the argv, the resolved configuration, the master
//! seed, sha256 digests of inputs and outputs, and the wall-clock duration.
//! The file is append-only, so a directory accumulates its full run history
//! and any recorded command can be replayed and checked against the stored
//! output digests.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MANIFEST_NAME: &str = "manifest.jsonl";

#[derive(Serialize)]
pub struct RunManifest {
    pub artifact_version: &'static str,
    pub command_line: Vec<String>,
    /// The configuration the run actually used, flags and defaults resolved.
    pub config: serde_json::Value,
    pub master_seed: Option<u64>,
    /// sha256 of each input file, keyed by the path as given.
    pub input_digests: BTreeMap<String, String>,
    /// Files written under the output root.
    pub outputs: Vec<OutputFile>,
    pub duration_seconds: f64,
}

#[derive(Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// An in-flight run: collects inputs and outputs, then seals the manifest.
pub struct Run {
    out_dir: PathBuf,
    started: Instant,
    config: serde_json::Value,
    master_seed: Option<u64>,
    inputs: BTreeMap<String, String>,
    outputs: Vec<OutputFile>,
}

impl Run {
    pub fn start(
        out_dir: &Path,
        config: serde_json::Value,
        master_seed: Option<u64>,
    ) -> io::Result<Run> {
        fs::create_dir_all(out_dir)?;
        Ok(Run {
            out_dir: out_dir.to_path_buf(),
            started: Instant::now(),
            config,
            master_seed,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn record_input(&mut self, path: &Path) -> io::Result<()> {
        let bytes = fs::read(path)?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Writes `name` under the output root and records its digest.
    pub fn write_output(&mut self, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes)?;
        self.outputs.push(OutputFile {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    /// Appends the manifest record. Call once, after all outputs are written.
    pub fn finish(self) -> io::Result<()> {
        let manifest = RunManifest {
            artifact_version: env!("CARGO_PKG_VERSION"),
            command_line: std::env::args().collect(),
            config: self.config,
            master_seed: self.master_seed,
            input_digests: self.inputs,
            outputs: self.outputs,
            duration_seconds: self.started.elapsed().as_secs_f64(),
        };
        let line = serde_json::to_string(&manifest).expect("plain data serializes");
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.out_dir.join(MANIFEST_NAME))?;
        writeln!(file, "{line}")
    }
}
