use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::PairSetConfig;
use crate::datasetgen::GenConfig;
use crate::decision::TrainConfig;
use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::tolerances::VOXEL_SIZE;

/// Everything the command line tools read from a config file.
///
/// The file is TOML: top-level keys, then optional sections `[pairs]`,
/// `[pairs.scene]`, `[pipeline]`, `[pipeline.svc]`, `[dataset]`,
/// `[dataset.hypgen]`, `[dataset.mining]`, `[dataset.corruptor]`, `[train]`
/// and `[train.features]`. Missing keys keep their defaults; unknown keys
/// are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// Master seed; every per-item seed is derived from it.
    pub seed: u64,
    /// Downsampling voxel for benchmark pairs, meters; 0 disables it.
    pub voxel: f64,
    /// Add wall-clock timings to reports (they are then not reproducible).
    pub include_runtime: bool,
    /// Strata of the stratified benchmark.
    pub inlier_ratios: Vec<f64>,
    /// Share of pairs used for training by `train`.
    pub split_fraction: f64,
    pub pairs: PairSetConfig,
    pub pipeline: PipelineConfig,
    pub dataset: GenConfig,
    pub train: TrainConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            seed: 0,
            voxel: VOXEL_SIZE,
            include_runtime: false,
            inlier_ratios: vec![0.02, 0.05, 0.10, 0.20],
            split_fraction: 0.8,
            pairs: PairSetConfig::default(),
            pipeline: PipelineConfig::default(),
            dataset: GenConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Copies the master seed into every section that takes one.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.propagate_seed();
        self
    }

    pub fn propagate_seed(&mut self) {
        self.pairs.seed = self.seed;
        self.pipeline.seed = self.seed;
        self.train.seed = self.seed;
        self.dataset.hypgen.seed = self.seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_override_defaults() {
        let cfg = BenchConfig::from_toml(
            "seed = 9\n[pipeline]\nm = 30\n[pipeline.svc]\nenabled = false\n[pairs.scene]\npoints_per_view = 800\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.pipeline.m, 30);
        assert!(!cfg.pipeline.svc.enabled);
        assert_eq!(cfg.pairs.scene.points_per_view, 800);
        assert_eq!(cfg.pipeline.score_threshold, 0.6);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(BenchConfig::from_toml("[pipeline]\nmm = 3\n").is_err());
    }
}
