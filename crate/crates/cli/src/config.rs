use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use synroute::datagen::DatagenConfig;
use synroute::hash::Fnv64;
use synroute::neural::{PolicyDims, TrainConfig};
use synroute::optimizer::{GaConfig, OracleSpec};
use synroute::planner::DecodeConfig;

use crate::Failure;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// 1024-bit inputs, 128-bit k-NN targets, two 256-wide layers per network.
    #[default]
    Toy,
    /// 4096/256-bit fingerprints and the large networks.
    Full,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub scale: Scale,
    pub hidden: Option<[usize; 4]>,
    pub depth: Option<usize>,
}

impl ModelConfig {
    pub fn dims(&self, n_templates: usize) -> PolicyDims {
        let mut d = match self.scale {
            Scale::Toy => PolicyDims::toy(n_templates),
            Scale::Full => PolicyDims::full(n_templates),
        };
        if let Some(h) = self.hidden {
            d.hidden = h;
        }
        if let Some(n) = self.depth {
            d.depth = n;
        }
        d
    }
}

/// Everything a run depends on. Precedence: flags, then file, then defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Master seed; every subsystem seed is derived from it.
    pub seed: u64,
    pub templates: Option<PathBuf>,
    pub blocks: Option<PathBuf>,
    pub datagen: DatagenConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub decode: DecodeConfig,
    pub ga: GaConfig,
    pub oracle: Option<OracleSpec>,
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))
    }

    /// Overwrites per-subsystem seeds with ones split from the master seed.
    pub fn derive_seeds(&mut self) {
        self.datagen.seed = split_seed(self.seed, "datagen");
        self.train.seed = split_seed(self.seed, "train");
        self.decode.seed = split_seed(self.seed, "decode");
        self.ga.seed = split_seed(self.seed, "ga");
    }
}

pub fn split_seed(master: u64, subsystem: &str) -> u64 {
    let mut h = Fnv64::new();
    h.write_u64(master);
    h.write(subsystem.as_bytes());
    h.finish()
}
