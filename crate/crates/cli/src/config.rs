//! End-to-end pipeline configuration.

use std::path::{Path, PathBuf};

use faultgraph::baselines::Algo;
use faultgraph::eval::{SeedPolicy, SweepGrid};
use faultgraph::features::{EemdParams, FeatureParams, LeafOrder, ScalingKind, WpdParams};
use faultgraph::gnn::TrainConfig;
use faultgraph::graph::Metric;
use faultgraph::ingest::{GroupSpec, WINDOW};
use faultgraph::rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Key reference shown by `pipeline --help`.
pub const CONFIG_HELP: &str = "\
Config keys (JSON; relative paths resolve against the config file's directory):
  manifest                     path to the record manifest (required)
  out_dir                      output directory (default \"out\"; --out-dir overrides)
  seed                         master seed; every stage seed is derived from it (default 0)
  n                            number of objects to flag (default: number of true faults)
  group.id                     1 = inner race, 2 = ball, 3 = outer race (required)
  group.normal_count           normal windows (default 800)
  group.fault_count            windows per fault severity (default 20)
  features.wpd_level           wavelet packet depth, 1..=6 (default 3)
  features.leaf_order          natural | frequency (default natural)
  features.eemd_ensemble       EEMD ensemble size >= 1 (default 100)
  features.eemd_noise_ratio    EEMD noise std / window std, >= 0 (default 0.2)
  features.eemd_imfs           IMFs kept, >= 1 (default 6)
  features.scaling             minmax | zscore | raw (default minmax)
  graph.k                      neighbours per object, 1..m-1 (default 5)
  graph.metric                 inv_euclidean | cosine01 (default inv_euclidean)
  model.hidden                 hidden width >= 1 (default 10)
  model.eta                    learning rate >= 0 (default 0.002)
  model.iters                  gradient steps >= 1 (default 100)
  model.extra_hidden_layers    additional hidden layers (default 0)
  baselines.algos              subset of [\"ae\", \"lof\", \"cof\"] (default none)
  baselines.k                  LOF/COF neighbours (default graph.k)
  sweep.grid                   {k, eta, iters, hidden, metric, extra_hidden_layers} lists
  sweep.seed_policy            fixed | per_cell (default per_cell)
A JSON schema is shipped as config/pipeline.schema.json.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub manifest: PathBuf,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub n: Option<usize>,
    pub group: GroupConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baselines: Option<BaselineConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub id: u8,
    #[serde(default = "default_normal_count")]
    pub normal_count: usize,
    #[serde(default = "default_fault_count")]
    pub fault_count: usize,
}

fn default_normal_count() -> usize {
    800
}

fn default_fault_count() -> usize {
    20
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    pub wpd_level: u32,
    pub leaf_order: LeafOrder,
    pub eemd_ensemble: usize,
    pub eemd_noise_ratio: f64,
    pub eemd_imfs: usize,
    pub scaling: ScalingKind,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        let eemd = EemdParams::default();
        FeatureConfig {
            wpd_level: WpdParams::default().level,
            leaf_order: LeafOrder::Natural,
            eemd_ensemble: eemd.ensemble,
            eemd_noise_ratio: eemd.noise_ratio,
            eemd_imfs: eemd.n_imfs,
            scaling: ScalingKind::Minmax,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if !(1..=6).contains(&self.wpd_level) {
            return Err(CliError::invalid(format!("features.wpd_level must be 1..=6, got {}", self.wpd_level)));
        }
        if self.eemd_ensemble == 0 {
            return Err(CliError::invalid("features.eemd_ensemble must be at least 1"));
        }
        if !(self.eemd_noise_ratio >= 0.0 && self.eemd_noise_ratio.is_finite()) {
            return Err(CliError::invalid(format!(
                "features.eemd_noise_ratio must be finite and >= 0, got {}",
                self.eemd_noise_ratio
            )));
        }
        if self.eemd_imfs == 0 {
            return Err(CliError::invalid("features.eemd_imfs must be at least 1"));
        }
        Ok(())
    }

    /// Extraction parameters; the window is padded to the next multiple of
    /// `2^level` at or above the window length.
    pub fn params(&self, eemd_seed: u64) -> FeatureParams {
        let block = 1usize << self.wpd_level;
        FeatureParams {
            wpd: WpdParams {
                level: self.wpd_level,
                padded_len: WINDOW.div_ceil(block) * block,
                order: self.leaf_order,
            },
            eemd: EemdParams {
                n_imfs: self.eemd_imfs,
                ensemble: self.eemd_ensemble,
                noise_ratio: self.eemd_noise_ratio,
                seed: eemd_seed,
                ..EemdParams::default()
            },
            scaling: self.scaling,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub k: usize,
    pub metric: Metric,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            k: 5,
            metric: Metric::InvEuclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub hidden: usize,
    pub eta: f64,
    pub iters: usize,
    pub extra_hidden_layers: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        ModelConfig {
            hidden: t.hidden,
            eta: t.eta,
            iters: t.iters,
            extra_hidden_layers: t.extra_hidden_layers,
        }
    }
}

impl ModelConfig {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            eta: self.eta,
            iters: self.iters,
            hidden: self.hidden,
            seed,
            extra_hidden_layers: self.extra_hidden_layers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub algos: Vec<Algo>,
    #[serde(default)]
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub grid: SweepGrid,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
}

/// Stage seeds, each derived from the master seed on its own stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StageSeeds {
    pub master: u64,
    pub group: u64,
    pub eemd: u64,
    pub model: u64,
    pub sweep: u64,
}

impl StageSeeds {
    pub fn derive(master: u64) -> Self {
        StageSeeds {
            master,
            group: rng::derive_seed(master, 0),
            eemd: rng::derive_seed(master, 1),
            model: rng::derive_seed(master, 2),
            sweep: rng::derive_seed(master, 3),
        }
    }
}

impl PipelineConfig {
    /// Reads a config and resolves its relative paths against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::invalid(format!("malformed config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.manifest.is_relative() {
            cfg.manifest = base.join(&cfg.manifest);
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn group_spec(&self, seed: u64) -> Result<GroupSpec, CliError> {
        let mut spec = GroupSpec::standard(self.group.id, seed)?;
        spec.normal_count = self.group.normal_count;
        spec.fault_count = self.group.fault_count;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !self.manifest.is_file() {
            return Err(CliError::invalid(format!("manifest {} does not exist", self.manifest.display())));
        }
        let spec = self.group_spec(0)?;
        if spec.total() < 2 || spec.fault_count == 0 {
            return Err(CliError::invalid("group must hold at least one fault window per severity and two windows in total"));
        }
        self.features.validate()?;
        if self.graph.k == 0 || self.graph.k >= spec.total() {
            return Err(CliError::invalid(format!(
                "graph.k must satisfy 1 <= k < {}, got {}",
                spec.total(),
                self.graph.k
            )));
        }
        self.model.train_config(0).validate()?;
        if let Some(n) = self.n {
            if n > spec.total() {
                return Err(CliError::invalid(format!("n = {n} exceeds the {} objects", spec.total())));
            }
        }
        if let Some(b) = &self.baselines {
            if let Some(k) = b.k {
                if k == 0 || k >= spec.total() {
                    return Err(CliError::invalid(format!("baselines.k must satisfy 1 <= k < {}", spec.total())));
                }
            }
        }
        if let Some(s) = &self.sweep {
            if s.grid.is_empty() {
                return Err(CliError::invalid("sweep.grid has an empty axis"));
            }
        }
        Ok(())
    }
}
