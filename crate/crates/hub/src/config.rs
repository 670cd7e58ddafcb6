//! TOML configuration shared by the CLI subcommands. Every section is
//! optional and falls back to the library defaults.

use std::path::{Path, PathBuf};

use anyhow::Context;
use fbipose_core::data_io::SynthDatasetConfig;
use fbipose_core::experiments::{SweepConfig, WeakConfig};
use fbipose_core::regressor::{HeadPretrainConfig, ModelConfig, TrainConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServeConfig {
    pub addr: String,
    /// Share of gold tasks in each annotator's stream.
    pub gold_fraction: f64,
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServeConfig {
    fn default() -> Self {
        Self { addr: "127.0.0.1:8080".into(), gold_fraction: 0.1, ui_dir: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HubConfig {
    pub seed: Option<u64>,
    pub synth: SynthDatasetConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub head: HeadPretrainConfig,
    pub weak: WeakConfig,
    pub sweep: SweepConfig,
    pub serve: ServeConfig,
}

impl HubConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Pushes a single seed into every section; `--seed` wins over the file.
    pub fn with_seed(mut self, cli_seed: Option<u64>) -> Self {
        if let Some(seed) = cli_seed.or(self.seed) {
            self.seed = Some(seed);
            self.synth.seed = seed;
            self.train.seed = seed;
            self.head.seed = seed;
            self.weak.seed = seed;
            self.sweep.seed = seed;
        }
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}
