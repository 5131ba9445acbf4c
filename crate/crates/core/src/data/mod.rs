//! Graph datasets: validated storage, file loading, synthetic generators and
//! train/val/test split management.

mod load;
mod splits;
mod synth;

use std::collections::VecDeque;

use ndarray::Array2;

use crate::error::{Error, Result};

pub use load::{load_dataset, SplitSpec};
pub use splits::{make_hierarchy_splits, random_masks, SplitMode};
pub use synth::{gen_synthetic, SyntheticKind, SyntheticSpec};

/// Boolean node masks. Pairwise disjoint by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Masks {
    pub train: Vec<bool>,
    pub val: Vec<bool>,
    pub test: Vec<bool>,
}

impl Masks {
    pub fn empty(n: usize) -> Self {
        Self {
            train: vec![false; n],
            val: vec![false; n],
            test: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.train.len();
        if self.val.len() != n || self.test.len() != n {
            return Err(Error::Data("mask lengths differ".into()));
        }
        for i in 0..n {
            let hits = self.train[i] as u8 + self.val[i] as u8 + self.test[i] as u8;
            if hits > 1 {
                return Err(Error::Data(format!("node {i} appears in more than one mask")));
            }
        }
        Ok(())
    }

    pub fn train_nodes(&self) -> Vec<usize> {
        indices(&self.train)
    }

    pub fn val_nodes(&self) -> Vec<usize> {
        indices(&self.val)
    }

    pub fn test_nodes(&self) -> Vec<usize> {
        indices(&self.test)
    }
}

pub(crate) fn indices(mask: &[bool]) -> Vec<usize> {
    mask.iter().enumerate().filter_map(|(i, &m)| m.then_some(i)).collect()
}

/// An undirected, attributed, labelled graph.
///
/// Edges are stored once as `(u, v)` with `u < v`; the CSR adjacency holds
/// both directions. Self-loops are never stored (the GCN adds them).
#[derive(Clone, Debug)]
pub struct GraphDataset {
    name: String,
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    raw_edge_count: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    features: Array2<f64>,
    labels: Vec<usize>,
    num_classes: usize,
    masks: Masks,
}

impl GraphDataset {
    /// Builds a dataset from an arbitrary edge list. Duplicate and reversed
    /// edges collapse, self-loops are dropped.
    pub fn new(
        name: impl Into<String>,
        num_nodes: usize,
        edges: &[(usize, usize)],
        features: Array2<f64>,
        labels: Vec<usize>,
        masks: Masks,
    ) -> Result<Self> {
        if features.nrows() != num_nodes {
            return Err(Error::Data(format!(
                "feature rows {} != node count {num_nodes}",
                features.nrows()
            )));
        }
        if labels.len() != num_nodes {
            return Err(Error::Data(format!(
                "label rows {} != node count {num_nodes}",
                labels.len()
            )));
        }
        if masks.len() != num_nodes {
            return Err(Error::Data("mask length != node count".into()));
        }
        masks.validate()?;
        let mut dedup = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::Data(format!("edge ({u}, {v}) has a dangling endpoint")));
            }
            if u != v {
                dedup.push((u.min(v), u.max(v)));
            }
        }
        dedup.sort_unstable();
        dedup.dedup();

        let mut degree = vec![0usize; num_nodes];
        for &(u, v) in &dedup {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = vec![0usize; num_nodes + 1];
        for i in 0..num_nodes {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0usize; offsets[num_nodes]];
        for &(u, v) in &dedup {
            neighbors[fill[u]] = v;
            fill[u] += 1;
            neighbors[fill[v]] = u;
            fill[v] += 1;
        }
        for i in 0..num_nodes {
            neighbors[offsets[i]..offsets[i + 1]].sort_unstable();
        }
        let num_classes = labels.iter().max().map_or(0, |m| m + 1);
        Ok(Self {
            name: name.into(),
            num_nodes,
            edges: dedup,
            raw_edge_count: edges.len(),
            offsets,
            neighbors,
            features,
            labels,
            num_classes,
            masks,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge lines seen before deduplication.
    pub fn raw_edge_count(&self) -> usize {
        self.raw_edge_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.neighbors[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn masks(&self) -> &Masks {
        &self.masks
    }

    pub fn set_masks(&mut self, masks: Masks) -> Result<()> {
        if masks.len() != self.num_nodes {
            return Err(Error::Data("mask length != node count".into()));
        }
        masks.validate()?;
        self.masks = masks;
        Ok(())
    }

    pub fn with_masks(mut self, masks: Masks) -> Result<Self> {
        self.set_masks(masks)?;
        Ok(self)
    }

    /// Hop distances from `src`; `usize::MAX` marks unreachable nodes.
    pub fn bfs(&self, src: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_nodes];
        let mut queue = VecDeque::new();
        dist[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Connected-component id per node, numbered in order of first appearance.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut comp = vec![usize::MAX; self.num_nodes];
        let mut count = 0;
        for s in 0..self.num_nodes {
            if comp[s] != usize::MAX {
                continue;
            }
            let mut queue = VecDeque::from([s]);
            comp[s] = count;
            while let Some(u) = queue.pop_front() {
                for &v in self.neighbors(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (count, comp)
    }

    /// The induced subgraph on the largest connected component, plus the
    /// original index of each retained node.
    pub fn largest_component(&self) -> Result<(GraphDataset, Vec<usize>)> {
        let (count, comp) = self.components();
        let mut sizes = vec![0usize; count];
        comp.iter().for_each(|&c| sizes[c] += 1);
        let best = (0..count)
            .max_by_key(|&c| (sizes[c], std::cmp::Reverse(c)))
            .unwrap_or(0);
        let keep: Vec<usize> = (0..self.num_nodes).filter(|&u| comp[u] == best).collect();
        self.induced(&keep).map(|g| (g, keep))
    }

    pub fn induced(&self, keep: &[usize]) -> Result<GraphDataset> {
        let mut remap = vec![usize::MAX; self.num_nodes];
        for (i, &u) in keep.iter().enumerate() {
            remap[u] = i;
        }
        let edges: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|(u, v)| remap[*u] != usize::MAX && remap[*v] != usize::MAX)
            .map(|&(u, v)| (remap[u], remap[v]))
            .collect();
        let features = self.features.select(ndarray::Axis(0), keep);
        let labels = keep.iter().map(|&u| self.labels[u]).collect();
        let pick = |m: &[bool]| keep.iter().map(|&u| m[u]).collect::<Vec<_>>();
        let masks = Masks {
            train: pick(&self.masks.train),
            val: pick(&self.masks.val),
            test: pick(&self.masks.test),
        };
        GraphDataset::new(self.name.clone(), keep.len(), &edges, features, labels, masks)
    }
}

/// Summary counts.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetStats {
    pub nodes: usize,
    pub edges: usize,
    pub raw_edges: usize,
    pub labels: usize,
    pub avg_degree: f64,
}

pub fn dataset_stats(ds: &GraphDataset) -> DatasetStats {
    let n = ds.num_nodes();
    DatasetStats {
        nodes: n,
        edges: ds.num_edges(),
        raw_edges: ds.raw_edge_count(),
        labels: ds.num_classes(),
        avg_degree: if n == 0 {
            0.0
        } else {
            2.0 * ds.num_edges() as f64 / n as f64
        },
    }
}
