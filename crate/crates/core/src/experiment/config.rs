use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attack::{MiaArm, MiaProtocol};
use crate::data::{gen_synthetic, load_dataset, GraphDataset, SplitMode, SplitSpec, SyntheticSpec};
use crate::dp::AuditConfig;
use crate::embed::{train_poincare_embedding, EmbedConfig, EmbeddingTable};
use crate::error::{Error, Result};
use crate::gnn::{NoiseMode, TrainConfig};

/// Where the graph comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Synthetic(SyntheticSpec),
    Files {
        name: Option<String>,
        edges: PathBuf,
        features: PathBuf,
        labels: PathBuf,
        #[serde(default)]
        split: SplitSpec,
    },
}

impl DatasetSource {
    pub fn name(&self) -> String {
        match self {
            DatasetSource::Synthetic(spec) => match spec.kind {
                crate::data::SyntheticKind::BalancedTree { .. } => "balanced_tree".into(),
                crate::data::SyntheticKind::HierarchicalBlocks { .. } => "hierarchical_blocks".into(),
                crate::data::SyntheticKind::TwoBlock { .. } => "two_block".into(),
            },
            DatasetSource::Files { name, edges, .. } => name.clone().unwrap_or_else(|| {
                edges
                    .parent()
                    .and_then(Path::file_name)
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "dataset".into())
            }),
        }
    }

    /// Materialises the dataset for one run seed. The seed is added to the
    /// synthetic generator seed or to the split seed of a file dataset.
    pub fn load(&self, seed: u64) -> Result<GraphDataset> {
        match self {
            DatasetSource::Synthetic(spec) => gen_synthetic(&SyntheticSpec {
                seed: spec.seed.wrapping_add(seed),
                ..spec.clone()
            }),
            DatasetSource::Files {
                edges,
                features,
                labels,
                split,
                ..
            } => {
                let split = match split.clone() {
                    SplitSpec::PerClass {
                        train_per_class,
                        val,
                        test,
                        seed: s,
                    } => SplitSpec::PerClass {
                        train_per_class,
                        val,
                        test,
                        seed: s.wrapping_add(seed),
                    },
                    SplitSpec::Fractions { train, val, seed: s } => SplitSpec::Fractions {
                        train,
                        val,
                        seed: s.wrapping_add(seed),
                    },
                };
                load_dataset(edges, features, labels, &split)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub epsilons: Vec<f64>,
    pub split_modes: Vec<SplitMode>,
    /// Training fraction for the hierarchy-ordered split modes.
    pub split_frac: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.01, 0.1, 0.5, 1.0],
            split_modes: vec![SplitMode::Random],
            split_frac: 0.33,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackSection {
    pub arms: Vec<MiaArm>,
    pub protocol: MiaProtocol,
}

impl Default for AttackSection {
    fn default() -> Self {
        Self {
            arms: MiaArm::ALL.to_vec(),
            protocol: MiaProtocol::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlotConfig {
    /// Arms whose per-node noise is mapped and accumulated.
    pub arms: Vec<NoiseMode>,
}

impl Default for PlotConfig {
    fn default() -> Self {
        Self {
            arms: vec![NoiseMode::Poindp, NoiseMode::EuclideanGauss],
        }
    }
}

/// A complete experiment description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    pub dataset: DatasetSource,
    /// Precomputed embedding table; trained per seed when absent.
    #[serde(default)]
    pub embedding_file: Option<PathBuf>,
    #[serde(default)]
    pub embed: EmbedConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub attack: AttackSection,
    #[serde(default)]
    pub audit: AuditConfig,
    #[serde(default)]
    pub plot: PlotConfig,
}

fn default_name() -> String {
    "run".into()
}
fn default_seeds() -> Vec<u64> {
    vec![0]
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Command-line values that take precedence over the config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub epsilon: Option<f64>,
    pub noise_mode: Option<NoiseMode>,
    pub out_dir: Option<PathBuf>,
    pub arms: Option<Vec<MiaArm>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    /// A config for a synthetic dataset with every other section at its default.
    pub fn synthetic(spec: SyntheticSpec) -> Self {
        Self {
            name: default_name(),
            seeds: default_seeds(),
            out_dir: default_out(),
            dataset: DatasetSource::Synthetic(spec),
            embedding_file: None,
            embed: EmbedConfig::default(),
            train: TrainConfig::default(),
            sweep: SweepConfig::default(),
            attack: AttackSection::default(),
            audit: AuditConfig::default(),
            plot: PlotConfig::default(),
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seeds = vec![seed];
        }
        if let Some(eps) = o.epsilon {
            self.train.budget = self.train.budget.with_epsilon(eps)?;
            self.attack.protocol.defense_epsilon = eps;
            self.audit.epsilon = eps;
            self.sweep.epsilons = vec![eps];
        }
        if let Some(mode) = o.noise_mode {
            self.train.noise_mode = mode;
        }
        if let Some(dir) = &o.out_dir {
            self.out_dir = dir.clone();
        }
        if let Some(arms) = &o.arms {
            self.attack.arms = arms.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("run name {:?} must be a plain file name", self.name));
        }
        if self.seeds.is_empty() {
            return bad("seeds list is empty".into());
        }
        self.embed.validate().map_err(config_err)?;
        self.train.validate().map_err(config_err)?;
        if let Some(e) = self.sweep.epsilons.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return bad(format!("sweep epsilon {e} outside (0, 1]"));
        }
        if !(self.sweep.split_frac > 0.0 && self.sweep.split_frac < 1.0) {
            return bad(format!("split_frac {} outside (0, 1)", self.sweep.split_frac));
        }
        if !(self.attack.protocol.defense_epsilon > 0.0 && self.attack.protocol.defense_epsilon <= 1.0) {
            return bad(format!(
                "defense epsilon {} outside (0, 1]",
                self.attack.protocol.defense_epsilon
            ));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical TOML rendering of the effective config.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn run_dir(&self) -> PathBuf {
        self.out_dir.join(&self.name)
    }

    /// The embedding for one run seed: loaded from `embedding_file` when set,
    /// otherwise trained on `dataset` with the embed seed offset by `seed`.
    pub fn embedding_for(&self, dataset: &GraphDataset, seed: u64) -> Result<EmbeddingTable> {
        let table = match &self.embedding_file {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                EmbeddingTable::from_text(&text)?
            }
            None => {
                let cfg = EmbedConfig {
                    seed: self.embed.seed.wrapping_add(seed),
                    ..self.embed.clone()
                };
                train_poincare_embedding(dataset, &cfg)?.table
            }
        };
        if table.len() != dataset.num_nodes() {
            return Err(Error::Data(format!(
                "embedding has {} rows, dataset has {} nodes",
                table.len(),
                dataset.num_nodes()
            )));
        }
        Ok(table)
    }
}

fn config_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}
