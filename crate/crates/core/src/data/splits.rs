use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GraphDataset, Masks};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};

/// How the training set is sampled for the hierarchy case study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Uniformly at random.
    Random,
    /// The `frac` of nodes with the smallest Poincaré norm (top of the hierarchy).
    TopLevel,
    /// The `frac` of nodes with the largest Poincaré norm.
    BottomLevel,
}

impl SplitMode {
    pub const ALL: [SplitMode; 3] = [SplitMode::Random, SplitMode::TopLevel, SplitMode::BottomLevel];

    pub fn name(self) -> &'static str {
        match self {
            SplitMode::Random => "random",
            SplitMode::TopLevel => "top_level",
            SplitMode::BottomLevel => "bottom_level",
        }
    }
}

/// Train/val/test masks from uniform fractions; the test set takes the rest.
pub fn random_masks(n: usize, train: f64, val: f64, seed: u64) -> Masks {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (train * n as f64).round() as usize;
    let n_val = (val * n as f64).round() as usize;
    let mut m = Masks::empty(n);
    for (i, u) in order.into_iter().enumerate() {
        if i < n_train {
            m.train[u] = true;
        } else if i < n_train + n_val {
            m.val[u] = true;
        } else {
            m.test[u] = true;
        }
    }
    m
}

/// Chooses `round(frac·|V|)` training nodes by `mode`; the remaining nodes
/// are shuffled and split evenly into validation and test.
pub fn make_hierarchy_splits(
    dataset: &GraphDataset,
    table: Option<&EmbeddingTable>,
    mode: SplitMode,
    frac: f64,
    seed: u64,
) -> Result<Masks> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(Error::param(format!("split fraction {frac} outside (0, 1)")));
    }
    let n = dataset.num_nodes();
    let k = (frac * n as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = match mode {
        SplitMode::Random => {
            let mut o: Vec<usize> = (0..n).collect();
            o.shuffle(&mut rng);
            o
        }
        SplitMode::TopLevel | SplitMode::BottomLevel => {
            let table = table.ok_or_else(|| Error::param(format!("{} split needs an embedding table", mode.name())))?;
            if table.len() != n {
                return Err(Error::param("embedding table does not cover the dataset"));
            }
            let radii = table.radii();
            let mut o: Vec<usize> = (0..n).collect();
            o.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]).then(a.cmp(&b)));
            if mode == SplitMode::BottomLevel {
                o.reverse();
            }
            o
        }
    };
    let mut masks = Masks::empty(n);
    let mut rest: Vec<usize> = Vec::with_capacity(n - k);
    for (i, &u) in order.iter().enumerate() {
        if i < k {
            masks.train[u] = true;
        } else {
            rest.push(u);
        }
    }
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    let half = rest.len() / 2;
    for (i, u) in rest.into_iter().enumerate() {
        if i < half {
            masks.val[u] = true;
        } else {
            masks.test[u] = true;
        }
    }
    Ok(masks)
}
