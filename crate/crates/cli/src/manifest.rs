//! Output bookkeeping: every file a run writes goes through [`Outputs`],
//! which records its SHA-256 for the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use smotelab::{Error, Result};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub flags: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub duration_seconds: f64,
    pub threads: usize,
    /// File name -> lowercase hex SHA-256.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Outputs {
    dir: PathBuf,
    digests: BTreeMap<String, String>,
    started: Instant,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            digests: BTreeMap::new(),
            started: Instant::now(),
        })
    }

    /// Write `bytes` to `name` inside the output directory.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        if Path::new(name).components().count() != 1 {
            return Err(Error::InvalidConfig(format!("output name '{name}' must be a plain file name")));
        }
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.digests.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Write the manifest last; it is not listed among its own digests.
    pub fn finish(self, name: &str, subcommand: &str, flags: serde_json::Value, seed: u64, threads: usize) -> Result<()> {
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            flags,
            seed,
            version: smotelab::VERSION.to_string(),
            duration_seconds: self.started.elapsed().as_secs_f64(),
            threads,
            outputs: self.digests,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}
