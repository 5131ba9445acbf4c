//! Noise-perturbed two-layer GCN for node classification.

mod metrics;
mod model;
mod train;

pub use metrics::{micro_f1, weighted_f1};
pub use model::{
    backward, gcn_forward, logistic, perturb_hidden, softmax_rows, split_budget, task_loss, ForwardCache, Gradients,
    ModelParams, NoiseDraw, NormalizedAdjacency, PreparedGraph,
};
pub use train::{
    draw_noise, evaluate, metrics_csv, predict_proba, train_poindp, EpochMetrics, EvalScores, TrainOutcome,
};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dp::{PrivacyBudget, DEFAULT_CLIP_TAU};
use crate::error::{Error, Result};

/// Which perturbation the hidden layer receives during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Radius and angle noise with a learned budget split.
    Poindp,
    /// Angle noise only.
    NoInter,
    /// Radius noise only.
    NoIntra,
    /// Both terms, split frozen at the configured `β`.
    NoAllocate,
    /// Gaussian mechanism on L2-clipped hidden rows.
    EuclideanGauss,
    /// Laplace mechanism on L2-clipped hidden rows.
    EuclideanLaplace,
    /// Plain GCN.
    None,
}

impl NoiseMode {
    pub const ALL: [NoiseMode; 7] = [
        NoiseMode::Poindp,
        NoiseMode::NoInter,
        NoiseMode::NoIntra,
        NoiseMode::NoAllocate,
        NoiseMode::EuclideanGauss,
        NoiseMode::EuclideanLaplace,
        NoiseMode::None,
    ];

    pub const ABLATIONS: [NoiseMode; 3] = [NoiseMode::NoInter, NoiseMode::NoIntra, NoiseMode::NoAllocate];

    pub fn name(self) -> &'static str {
        match self {
            NoiseMode::Poindp => "poindp",
            NoiseMode::NoInter => "no_inter",
            NoiseMode::NoIntra => "no_intra",
            NoiseMode::NoAllocate => "no_allocate",
            NoiseMode::EuclideanGauss => "euclidean_gauss",
            NoiseMode::EuclideanLaplace => "euclidean_laplace",
            NoiseMode::None => "none",
        }
    }

    /// Row label as used in ablation tables.
    pub fn label(self) -> &'static str {
        match self {
            NoiseMode::Poindp => "PoinDP",
            NoiseMode::NoInter => "PoinDP (w/o inter)",
            NoiseMode::NoIntra => "PoinDP (w/o intra)",
            NoiseMode::NoAllocate => "PoinDP (w/o allocate)",
            NoiseMode::EuclideanGauss => "GCN + Gaussian",
            NoiseMode::EuclideanLaplace => "GCN + Laplace",
            NoiseMode::None => "GCN",
        }
    }

    /// Arms whose noise is driven by the hierarchy embedding.
    pub fn needs_embedding(self) -> bool {
        matches!(
            self,
            NoiseMode::Poindp | NoiseMode::NoInter | NoiseMode::NoIntra | NoiseMode::NoAllocate
        )
    }

    /// Arms where `β` is updated by the optimiser.
    pub fn learns_split(self) -> bool {
        matches!(self, NoiseMode::Poindp | NoiseMode::NoInter | NoiseMode::NoIntra)
    }
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NoiseMode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown noise mode {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub epochs: usize,
    pub lr: f64,
    /// L2 penalty on the first layer, applied inside the optimiser.
    pub weight_decay: f64,
    pub seed: u64,
    pub budget: PrivacyBudget,
    pub noise_mode: NoiseMode,
    /// Row clip for the Euclidean arms.
    pub clip_bound: f64,
    pub clip_tau: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 16,
            epochs: 200,
            lr: 0.005,
            weight_decay: 5e-4,
            seed: 0,
            budget: PrivacyBudget::new(1.0, 1e-5, 0.5).expect("valid default budget"),
            noise_mode: NoiseMode::Poindp,
            clip_bound: 1.0,
            clip_tau: DEFAULT_CLIP_TAU,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.budget.validate()?;
        if self.hidden_dim == 0 || self.epochs == 0 {
            return Err(Error::param("hidden_dim and epochs must be ≥ 1"));
        }
        if !(self.lr > 0.0) || !(self.weight_decay >= 0.0) || !(self.clip_bound > 0.0) {
            return Err(Error::param("lr and clip_bound must be > 0, weight_decay ≥ 0"));
        }
        if !(self.clip_tau > 0.0 && self.clip_tau < 1.0) {
            return Err(Error::param(format!("clip_tau {} outside (0, 1)", self.clip_tau)));
        }
        Ok(())
    }
}
