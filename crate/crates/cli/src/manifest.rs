use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use synroute::hash::hex64;

use crate::config::Config;
use crate::Failure;

/// Record of one command invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub args: Vec<String>,
    pub config: Config,
    /// Input name to FNV-1a hash (hex).
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub threads: usize,
    pub version: String,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

pub fn now_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_millis())
}

impl RunManifest {
    pub fn new(command: &str, config: &Config) -> Self {
        Self {
            command: command.into(),
            args: std::env::args().skip(1).collect(),
            config: config.clone(),
            inputs: BTreeMap::new(),
            seed: config.seed,
            threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION").into(),
            started_unix_ms: now_ms(),
            finished_unix_ms: 0,
        }
    }

    pub fn input(&mut self, name: &str, hash: u64) {
        self.inputs.insert(name.into(), hex64(hash));
    }

    pub fn finish(mut self, dir: &Path) -> Result<(), Failure> {
        self.finished_unix_ms = now_ms();
        let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
        crate::write(&dir.join("manifest.json"), json.as_bytes())
    }
}
