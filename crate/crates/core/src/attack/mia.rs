//! Shadow-model membership inference.
//!
//! The node set is cut into four disjoint, equally sized pools: members and
//! non-members of the target, and members and non-members of the shadow. The
//! shadow model is trained on its members, an attack classifier learns to
//! separate shadow members from non-members by their posteriors, and the
//! attack is scored on the target's pools.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mlp::{AttackMlp, MlpConfig};
use crate::data::{GraphDataset, Masks};
use crate::dp::PrivacyBudget;
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::gnn::{predict_proba, train_poindp, NoiseMode, PreparedGraph, TrainConfig};
use crate::hyp;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShadowSplit {
    pub target_members: Vec<usize>,
    pub target_nonmembers: Vec<usize>,
    pub shadow_members: Vec<usize>,
    pub shadow_nonmembers: Vec<usize>,
}

impl ShadowSplit {
    pub fn pool_size(&self) -> usize {
        self.target_members.len()
    }

    fn masks(n: usize, members: &[usize], nonmembers: &[usize]) -> Masks {
        let mut m = Masks::empty(n);
        members.iter().for_each(|&u| m.train[u] = true);
        nonmembers.iter().for_each(|&u| m.test[u] = true);
        m
    }

    pub fn target_masks(&self, n: usize) -> Masks {
        Self::masks(n, &self.target_members, &self.target_nonmembers)
    }

    pub fn shadow_masks(&self, n: usize) -> Masks {
        Self::masks(n, &self.shadow_members, &self.shadow_nonmembers)
    }
}

/// Four disjoint pools of `size` nodes each, drawn by a seeded shuffle.
pub fn build_shadow_splits(dataset: &GraphDataset, size: usize, seed: u64) -> Result<ShadowSplit> {
    let n = dataset.num_nodes();
    if size == 0 || size.saturating_mul(4) > n {
        return Err(Error::Data(format!(
            "shadow split of size {size} needs at least {} nodes, dataset has {n}",
            size.saturating_mul(4)
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut pools = order.chunks_exact(size).take(4).map(|c| {
        let mut v = c.to_vec();
        v.sort_unstable();
        v
    });
    Ok(ShadowSplit {
        target_members: pools.next().unwrap(),
        target_nonmembers: pools.next().unwrap(),
        shadow_members: pools.next().unwrap(),
        shadow_nonmembers: pools.next().unwrap(),
    })
}

/// One attack example: the posterior sorted in descending order, optionally
/// followed by the node's Poincaré norm.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackRecord {
    pub posterior: Vec<f64>,
    pub hierarchy: Option<f64>,
    pub member: bool,
}

impl AttackRecord {
    pub fn features(&self) -> Vec<f64> {
        self.posterior.iter().copied().chain(self.hierarchy).collect()
    }
}

pub fn attack_records(
    posteriors: &Array2<f64>,
    nodes: &[usize],
    member: bool,
    table: Option<&EmbeddingTable>,
) -> Result<Vec<AttackRecord>> {
    nodes
        .iter()
        .map(|&u| {
            let mut posterior = posteriors.row(u).to_vec();
            let total: f64 = posterior.iter().sum();
            if (total - 1.0).abs() > 1e-6 {
                return Err(Error::Numeric(format!("posterior of node {u} sums to {total}")));
            }
            posterior.sort_by(|a, b| b.total_cmp(a));
            let hierarchy = table.map(|t| t.point(u).map(hyp::poincare_norm)).transpose()?;
            Ok(AttackRecord {
                posterior,
                hierarchy,
                member,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AttackMetrics {
    pub auc: f64,
    pub precision: f64,
}

/// Area under the ROC curve via the Mann–Whitney statistic; tied scores
/// count one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> f64 {
    let ranks = crate::stats::average_ranks(scores);
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return 0.5;
    }
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg)
}

/// Fraction of records scored above `threshold` that are members; zero when
/// nothing crosses the threshold.
pub fn precision_at(scores: &[f64], labels: &[bool], threshold: f64) -> f64 {
    let (tp, fp) = scores.iter().zip(labels).fold((0usize, 0usize), |(tp, fp), (&s, &l)| {
        if s > threshold {
            if l {
                (tp + 1, fp)
            } else {
                (tp, fp + 1)
            }
        } else {
            (tp, fp)
        }
    });
    if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    }
}

fn to_matrix(records: &[AttackRecord]) -> (Array2<f64>, Vec<f64>, Vec<bool>) {
    let rows: Vec<Vec<f64>> = records.iter().map(AttackRecord::features).collect();
    let cols = rows.first().map_or(0, Vec::len);
    let x = Array2::from_shape_vec((rows.len(), cols), rows.concat()).expect("uniform record width");
    let labels: Vec<bool> = records.iter().map(|r| r.member).collect();
    let y = labels.iter().map(|&l| f64::from(l)).collect();
    (x, y, labels)
}

/// Trains a shadow model on the shadow pools and scores an attack classifier
/// against the target posteriors.
pub fn run_mia(
    target_posteriors: &Array2<f64>,
    shadow_config: &TrainConfig,
    dataset: &GraphDataset,
    split: &ShadowSplit,
    table: Option<&EmbeddingTable>,
    with_hierarchy: bool,
    mlp: &MlpConfig,
) -> Result<AttackMetrics> {
    if with_hierarchy && table.is_none() {
        return Err(Error::param("hierarchy-enhanced attack needs an embedding table"));
    }
    let n = dataset.num_nodes();
    if target_posteriors.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: target_posteriors.nrows(),
        });
    }
    let h = if with_hierarchy { table } else { None };
    let shadow_ds = dataset.clone().with_masks(split.shadow_masks(n))?;
    let shadow = train_poindp(&shadow_ds, table, shadow_config)?;
    let shadow_post = predict_proba(&PreparedGraph::new(dataset), &shadow.params)?;
    let mut train = attack_records(&shadow_post, &split.shadow_members, true, h)?;
    train.extend(attack_records(&shadow_post, &split.shadow_nonmembers, false, h)?);
    let mut test = attack_records(target_posteriors, &split.target_members, true, h)?;
    test.extend(attack_records(target_posteriors, &split.target_nonmembers, false, h)?);

    let (xt, yt, _) = to_matrix(&train);
    let (model, _) = AttackMlp::fit(&xt, &yt, mlp)?;
    let (xe, _, labels) = to_matrix(&test);
    let scores = model.predict(&xe);
    Ok(AttackMetrics {
        auc: auc(&scores, &labels),
        precision: precision_at(&scores, &labels, 0.5),
    })
}

/// Target, shadow and defense settings for an attack experiment. Target and
/// shadow are the same undefended GCN trained long enough to overfit its
/// members; the defended target adds hierarchy-aware noise at
/// `defense_epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MiaProtocol {
    /// Size of each of the four pools as a fraction of the nodes.
    pub pool_fraction: f64,
    pub hidden_dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub defense_epsilon: f64,
    pub defense_delta: f64,
    pub mlp: MlpConfig,
}

impl Default for MiaProtocol {
    fn default() -> Self {
        Self {
            pool_fraction: 0.25,
            hidden_dim: 16,
            lr: 0.01,
            epochs: 300,
            defense_epsilon: 0.2,
            defense_delta: 1e-5,
            mlp: MlpConfig::default(),
        }
    }
}

impl MiaProtocol {
    /// The undefended training configuration shared by target and shadow.
    pub fn target_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            hidden_dim: self.hidden_dim,
            epochs: self.epochs,
            lr: self.lr,
            weight_decay: 0.0,
            seed,
            noise_mode: NoiseMode::None,
            ..TrainConfig::default()
        }
    }

    pub fn defense_config(&self, seed: u64) -> Result<TrainConfig> {
        Ok(TrainConfig {
            noise_mode: NoiseMode::Poindp,
            budget: PrivacyBudget::new(self.defense_epsilon, self.defense_delta, 0.5)?,
            ..self.target_config(seed)
        })
    }
}

/// Runs the requested attack arms against targets trained on one shadow
/// split of `dataset`. The undefended target is shared by `gcn` and `gcn+H`.
pub fn mia_experiment(
    dataset: &GraphDataset,
    table: Option<&EmbeddingTable>,
    protocol: &MiaProtocol,
    arms: &[MiaArm],
    seed: u64,
) -> Result<Vec<(MiaArm, AttackMetrics)>> {
    if arms.is_empty() {
        return Err(Error::Config("no attack arms requested".into()));
    }
    if !(protocol.pool_fraction > 0.0 && protocol.pool_fraction <= 0.25) {
        return Err(Error::param(format!(
            "pool fraction {} outside (0, 0.25]",
            protocol.pool_fraction
        )));
    }
    if arms.iter().any(|a| a.with_hierarchy()) && table.is_none() {
        return Err(Error::param("hierarchy-enhanced attack needs an embedding table"));
    }
    let n = dataset.num_nodes();
    let pool = (protocol.pool_fraction * n as f64).floor() as usize;
    let split = build_shadow_splits(dataset, pool, seed)?;
    let target_ds = dataset.clone().with_masks(split.target_masks(n))?;
    let graph = PreparedGraph::new(dataset);
    let base = protocol.target_config(seed);
    let mlp = MlpConfig { seed, ..protocol.mlp };

    let mut undefended = None;
    let mut out = Vec::with_capacity(arms.len());
    for &arm in arms {
        let posteriors = match arm {
            MiaArm::Gcn | MiaArm::GcnH => match &undefended {
                Some(p) => p,
                None => {
                    let fit = train_poindp(&target_ds, None, &base)?;
                    &*undefended.insert(predict_proba(&graph, &fit.params)?)
                }
            },
            MiaArm::Poindp => {
                let table = table.ok_or_else(|| Error::param("defended target needs an embedding table"))?;
                let fit = train_poindp(&target_ds, Some(table), &protocol.defense_config(seed)?)?;
                &predict_proba(&graph, &fit.params)?
            }
        };
        let metrics = run_mia(posteriors, &base, dataset, &split, table, arm.with_hierarchy(), &mlp)?;
        out.push((arm, metrics));
    }
    Ok(out)
}

/// Attack arms: an undefended target with or without the hierarchy feature,
/// and a target trained under hierarchy-aware noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MiaArm {
    #[serde(rename = "gcn")]
    Gcn,
    #[serde(rename = "gcn+H")]
    GcnH,
    #[serde(rename = "poindp")]
    Poindp,
}

impl MiaArm {
    pub const ALL: [MiaArm; 3] = [MiaArm::Gcn, MiaArm::GcnH, MiaArm::Poindp];

    pub fn name(self) -> &'static str {
        match self {
            MiaArm::Gcn => "gcn",
            MiaArm::GcnH => "gcn+H",
            MiaArm::Poindp => "poindp",
        }
    }

    pub fn with_hierarchy(self) -> bool {
        self == MiaArm::GcnH
    }
}

impl fmt::Display for MiaArm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for MiaArm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MiaArm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown attack arm {s:?}")))
    }
}

/// One attack CSV row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackRow {
    pub dataset: String,
    pub defense_mode: String,
    pub with_hierarchy: bool,
    pub epsilon: f64,
    pub auc: f64,
    pub precision: f64,
    pub seed: u64,
}

impl AttackRow {
    pub const HEADER: &'static str = "dataset,defense_mode,with_hierarchy,epsilon,auc,precision,seed";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.dataset, self.defense_mode, self.with_hierarchy, self.epsilon, self.auc, self.precision, self.seed
        )
    }
}
