use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{random_masks, GraphDataset};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SyntheticKind {
    /// Complete `branching`-ary tree of the given depth. Labels are the
    /// root-child subtree a node belongs to (the root is class 0).
    BalancedTree { branching: usize, depth: usize },
    /// A tree of communities: each tree vertex is a block of `block_size`
    /// nodes wired densely inside (`p_intra`, plus a spanning path), with
    /// parent/child blocks connected pairwise with probability `p_inter`.
    /// Labels follow the block's root-child subtree (the root block is class 0).
    HierarchicalBlocks {
        branching: usize,
        depth: usize,
        block_size: usize,
        p_intra: f64,
        p_inter: f64,
    },
    /// Two-community stochastic block model.
    TwoBlock { block_size: usize, p_in: f64, p_out: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    #[serde(default = "default_feature_dim")]
    pub feature_dim: usize,
    #[serde(default = "default_feature_noise")]
    pub feature_noise: f64,
    #[serde(default = "default_train_frac")]
    pub train_frac: f64,
    #[serde(default = "default_val_frac")]
    pub val_frac: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_feature_dim() -> usize {
    16
}
fn default_feature_noise() -> f64 {
    1.0
}
fn default_train_frac() -> f64 {
    0.3
}
fn default_val_frac() -> f64 {
    0.2
}

impl SyntheticSpec {
    pub fn new(kind: SyntheticKind, seed: u64) -> Self {
        Self {
            kind,
            feature_dim: default_feature_dim(),
            feature_noise: default_feature_noise(),
            train_frac: default_train_frac(),
            val_frac: default_val_frac(),
            seed,
        }
    }

    pub fn balanced_tree(branching: usize, depth: usize, seed: u64) -> Self {
        Self::new(SyntheticKind::BalancedTree { branching, depth }, seed)
    }

    pub fn two_block(block_size: usize, seed: u64) -> Self {
        Self::new(
            SyntheticKind::TwoBlock {
                block_size,
                p_in: 0.1,
                p_out: 0.01,
            },
            seed,
        )
    }

    /// 13 blocks of 12 nodes (156 nodes): small enough for exact
    /// δ-hyperbolicity, hierarchical enough for the attack experiments.
    pub fn hierarchical_blocks(seed: u64) -> Self {
        Self::new(
            SyntheticKind::HierarchicalBlocks {
                branching: 3,
                depth: 2,
                block_size: 12,
                p_intra: 0.3,
                p_inter: 0.02,
            },
            seed,
        )
    }

    fn validate(&self) -> Result<()> {
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        let ok = match self.kind {
            SyntheticKind::BalancedTree { branching, depth } => branching >= 2 && depth >= 1,
            SyntheticKind::HierarchicalBlocks {
                branching,
                depth,
                block_size,
                p_intra,
                p_inter,
            } => branching >= 2 && depth >= 1 && block_size >= 1 && prob(p_intra) && prob(p_inter),
            SyntheticKind::TwoBlock {
                block_size,
                p_in,
                p_out,
            } => block_size >= 1 && prob(p_in) && prob(p_out),
        };
        if !ok || self.feature_dim == 0 || !(self.feature_noise >= 0.0) {
            return Err(Error::param(format!("invalid synthetic spec {self:?}")));
        }
        if !(self.train_frac > 0.0 && self.val_frac >= 0.0 && self.train_frac + self.val_frac < 1.0) {
            return Err(Error::param("synthetic split fractions must leave a test set"));
        }
        Ok(())
    }
}

/// Parent of each vertex of a complete `b`-ary tree laid out in BFS order,
/// together with each vertex's root-child branch and depth.
fn tree_layout(b: usize, depth: usize) -> (Vec<Option<usize>>, Vec<usize>, Vec<usize>) {
    let n = (b.pow(depth as u32 + 1) - 1) / (b - 1);
    let mut parent = vec![None; n];
    let mut branch = vec![0usize; n];
    let mut level = vec![0usize; n];
    for v in 1..n {
        let p = (v - 1) / b;
        parent[v] = Some(p);
        level[v] = level[p] + 1;
        branch[v] = if p == 0 { v - 1 } else { branch[p] };
    }
    (parent, branch, level)
}

/// Builds a deterministic synthetic graph for `spec`.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<GraphDataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (n, edges, labels, classes, name) = match spec.kind {
        SyntheticKind::BalancedTree { branching, depth } => {
            let (parent, branch, _) = tree_layout(branching, depth);
            let edges: Vec<_> = parent
                .iter()
                .enumerate()
                .filter_map(|(v, p)| p.map(|p| (p, v)))
                .collect();
            (parent.len(), edges, branch, branching, "balanced_tree")
        }
        SyntheticKind::HierarchicalBlocks {
            branching,
            depth,
            block_size,
            p_intra,
            p_inter,
        } => {
            let (parent, branch, _) = tree_layout(branching, depth);
            let blocks = parent.len();
            let n = blocks * block_size;
            let member = |blk: usize, i: usize| blk * block_size + i;
            let mut edges = Vec::new();
            for (blk, &up) in parent.iter().enumerate() {
                for i in 0..block_size {
                    if i + 1 < block_size {
                        edges.push((member(blk, i), member(blk, i + 1)));
                    }
                    for j in i + 2..block_size {
                        if rng.gen::<f64>() < p_intra {
                            edges.push((member(blk, i), member(blk, j)));
                        }
                    }
                }
                if let Some(p) = up {
                    for i in 0..block_size {
                        for j in 0..block_size {
                            if rng.gen::<f64>() < p_inter {
                                edges.push((member(p, i), member(blk, j)));
                            }
                        }
                    }
                }
            }
            let labels = (0..n).map(|u| branch[u / block_size]).collect();
            (n, edges, labels, branching, "hierarchical_blocks")
        }
        SyntheticKind::TwoBlock {
            block_size,
            p_in,
            p_out,
        } => {
            let n = 2 * block_size;
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    let same = (u < block_size) == (v < block_size);
                    if rng.gen::<f64>() < if same { p_in } else { p_out } {
                        edges.push((u, v));
                    }
                }
            }
            let labels = (0..n).map(|u| usize::from(u >= block_size)).collect();
            (n, edges, labels, 2, "two_block")
        }
    };

    let d = spec.feature_dim;
    let means: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let mut features = Array2::zeros((n, d));
    for u in 0..n {
        for j in 0..d {
            let noise: f64 = rng.sample(StandardNormal);
            features[[u, j]] = means[labels[u]][j] + spec.feature_noise * noise;
        }
    }
    let masks = random_masks(n, spec.train_frac, spec.val_frac, spec.seed ^ 0x5eed);
    GraphDataset::new(name, n, &edges, features, labels, masks)
}
