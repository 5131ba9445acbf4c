//! Shallow hierarchy-aware node embeddings in the Poincaré ball.
//!
//! Each edge `(u, v)` is scored against sampled non-neighbours `v'` with the
//! distance softmax
//!
//! ```text
//! L(u, v) = -log( exp(-d(u, v)) / Σ_{v' ∈ {v} ∪ N(u,v)} exp(-d(u, v')) )
//! ```
//!
//! and minimised by Riemannian SGD: the Euclidean gradient is rescaled by the
//! inverse metric `(1 − c‖θ‖²)² / 4` and the result projected back inside the
//! ball. Training is single-threaded and fully determined by the seed.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::GraphDataset;
use crate::error::{Error, Result};
use crate::hyp::{self, BallPoint, Curvature, DEFAULT_MARGIN};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedConfig {
    pub dim: usize,
    pub lr: f64,
    pub epochs: usize,
    pub neg_samples: usize,
    pub burn_in_epochs: usize,
    pub seed: u64,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        Self {
            dim: 2,
            lr: 0.3,
            epochs: 100,
            neg_samples: 10,
            burn_in_epochs: 10,
            seed: 0,
        }
    }
}

impl EmbedConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || !(self.lr > 0.0) || self.epochs == 0 || self.neg_samples == 0 {
            return Err(Error::param(format!("invalid embedding config {self:?}")));
        }
        Ok(())
    }
}

/// Node-indexed Poincaré embeddings.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    points: Vec<BallPoint>,
    curvature: Curvature,
}

impl EmbeddingTable {
    pub fn new(points: Vec<BallPoint>, curvature: Curvature) -> Result<Self> {
        let dim = points.first().map_or(0, BallPoint::dim);
        for p in &points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.dim(),
                });
            }
            if p.curvature() != curvature {
                return Err(Error::CurvatureMismatch(curvature.value(), p.curvature().value()));
            }
        }
        Ok(Self { points, curvature })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, BallPoint::dim)
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    pub fn points(&self) -> &[BallPoint] {
        &self.points
    }

    pub fn point(&self, u: usize) -> Result<&BallPoint> {
        self.points.get(u).ok_or(Error::UnknownNode(u))
    }

    /// Poincaré norm of every node, in node order.
    pub fn radii(&self) -> Vec<f64> {
        self.points.iter().map(hyp::poincare_norm).collect()
    }

    /// Serialises as a header `dim=<n> curvature=<c>` followed by one
    /// `node_id v_1 ... v_n` line per node.
    pub fn to_text(&self) -> String {
        let mut out = format!("dim={} curvature={}\n", self.dim(), self.curvature.value());
        for (i, p) in self.points.iter().enumerate() {
            let _ = write!(out, "{i}");
            for v in p.coords() {
                let _ = write!(out, " {v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::Parse {
            path: "<embedding>".into(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hl, header) = lines.next().ok_or(Error::Empty("embedding file"))?;
        let mut dim = None;
        let mut c = None;
        for tok in header.split_whitespace() {
            match tok.split_once('=') {
                Some(("dim", v)) => dim = v.parse::<usize>().ok(),
                Some(("curvature", v)) => c = v.parse::<f64>().ok(),
                _ => return Err(bad(hl + 1, format!("unexpected header token {tok:?}"))),
            }
        }
        let dim = dim.ok_or_else(|| bad(hl + 1, "missing dim".into()))?;
        let curvature = Curvature::new(c.ok_or_else(|| bad(hl + 1, "missing curvature".into()))?)?;
        let mut points = Vec::new();
        for (ln, line) in lines {
            let mut toks = line.split_whitespace();
            let id: usize = toks
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(ln + 1, "bad node id".into()))?;
            if id != points.len() {
                return Err(bad(ln + 1, format!("expected node {} got {id}", points.len())));
            }
            let coords = toks
                .map(str::parse::<f64>)
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| bad(ln + 1, e.to_string()))?;
            if coords.len() != dim {
                return Err(bad(ln + 1, format!("expected {dim} values, got {}", coords.len())));
            }
            points.push(BallPoint::new(coords, curvature)?);
        }
        Self::new(points, curvature)
    }
}

/// Radius of node `u` (its Poincaré norm).
pub fn node_radius(table: &EmbeddingTable, u: usize) -> Result<f64> {
    Ok(hyp::poincare_norm(table.point(u)?))
}

/// Cosine angle between the embeddings of `u` and `v`.
pub fn node_angle(table: &EmbeddingTable, u: usize, v: usize) -> Result<f64> {
    hyp::angle(table.point(u)?, table.point(v)?)
}

/// Distance and its Euclidean gradient with respect to both arguments, using
/// `d = arcosh(1 + 2c‖u−v‖² / ((1−c‖u‖²)(1−c‖v‖²))) / √c`.
pub(crate) fn distance_with_grads(u: &[f64], v: &[f64], c: f64) -> (f64, Vec<f64>, Vec<f64>) {
    let alpha = 1.0 - c * hyp::norm_sq(u);
    let beta = 1.0 - c * hyp::norm_sq(v);
    let diff: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let diff2 = hyp::norm_sq(&diff);
    let gamma = 1.0 + 2.0 * c * diff2 / (alpha * beta);
    let sc = c.sqrt();
    let d = hyp::distance_raw(u, v, c);
    let root = (gamma * gamma - 1.0).max(1e-30).sqrt();
    let k = 4.0 * c / (alpha * beta) / (sc * root);
    let gu = u
        .iter()
        .zip(&diff)
        .map(|(ui, di)| k * (di + c * diff2 * ui / alpha))
        .collect();
    let gv = v
        .iter()
        .zip(&diff)
        .map(|(vi, di)| k * (-di + c * diff2 * vi / beta))
        .collect();
    (d, gu, gv)
}

fn softmax_loss(d_pos: f64, d_neg: &[f64]) -> (f64, Vec<f64>) {
    let m = d_neg.iter().copied().fold(d_pos, f64::min);
    let mut w: Vec<f64> = std::iter::once(d_pos)
        .chain(d_neg.iter().copied())
        .map(|d| (-(d - m)).exp())
        .collect();
    let z: f64 = w.iter().sum();
    let loss = d_pos - m + z.ln();
    w.iter_mut().for_each(|x| *x /= z);
    (loss.max(0.0), w)
}

/// Distance-softmax loss of one edge against its negatives.
pub fn embedding_loss(table: &EmbeddingTable, edge: (usize, usize), negatives: &[usize]) -> Result<f64> {
    if negatives.is_empty() {
        return Err(Error::Empty("negative sample list"));
    }
    let (u, v) = edge;
    if negatives.contains(&v) {
        return Err(Error::param(format!("negative set contains the positive node {v}")));
    }
    let c = table.curvature.value();
    let pu = table.point(u)?.coords();
    let d_pos = hyp::distance_raw(pu, table.point(v)?.coords(), c);
    let d_neg = negatives
        .iter()
        .map(|&w| Ok(hyp::distance_raw(pu, table.point(w)?.coords(), c)))
        .collect::<Result<Vec<_>>>()?;
    Ok(softmax_loss(d_pos, &d_neg).0)
}

/// One Riemannian SGD step on the listed nodes. The whole batch is rejected,
/// leaving the table untouched, if any gradient is non-finite.
pub fn riemannian_step(table: &mut EmbeddingTable, grads: &[(usize, Vec<f64>)], lr: f64) -> Result<()> {
    let dim = table.dim();
    for (u, g) in grads {
        if *u >= table.len() {
            return Err(Error::UnknownNode(*u));
        }
        if g.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: g.len(),
            });
        }
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteGradient(*u));
        }
    }
    let c = table.curvature.value();
    for (u, g) in grads {
        let theta = table.points[*u].coords();
        let scale = (1.0 - c * hyp::norm_sq(theta)).powi(2) / 4.0;
        let moved: Vec<f64> = theta.iter().zip(g).map(|(t, gi)| t - lr * scale * gi).collect();
        table.points[*u] = BallPoint::from_raw_unchecked(hyp::project_raw(moved, c, DEFAULT_MARGIN), table.curvature);
    }
    Ok(())
}

/// Trained table plus the mean loss of every epoch.
#[derive(Clone, Debug)]
pub struct EmbedOutcome {
    pub table: EmbeddingTable,
    pub epoch_losses: Vec<f64>,
}

fn init_table(n: usize, dim: usize, curvature: Curvature, rng: &mut ChaCha8Rng) -> EmbeddingTable {
    let points = (0..n)
        .map(|_| {
            let dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let len = hyp::norm(&dir).max(f64::MIN_POSITIVE);
            let r = 1e-3 * rng.gen::<f64>().powf(1.0 / dim as f64);
            BallPoint::from_raw_unchecked(dir.iter().map(|x| x / len * r).collect(), curvature)
        })
        .collect();
    EmbeddingTable { points, curvature }
}

fn sample_negatives(graph: &GraphDataset, u: usize, v: usize, k: usize, rng: &mut ChaCha8Rng, out: &mut Vec<usize>) {
    out.clear();
    let n = graph.num_nodes();
    let mut tries = 0;
    while out.len() < k && tries < 20 * k {
        tries += 1;
        let w = rng.gen_range(0..n);
        if w != u && w != v && !graph.has_edge(u, w) {
            out.push(w);
        }
    }
}

/// Learns an embedding of `graph` and reports the per-epoch mean loss.
pub fn train_poincare_embedding(graph: &GraphDataset, config: &EmbedConfig) -> Result<EmbedOutcome> {
    config.validate()?;
    if graph.num_edges() == 0 {
        return Err(Error::Empty("edge set"));
    }
    let curvature = Curvature::default();
    let c = curvature.value();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut table = init_table(graph.num_nodes(), config.dim, curvature, &mut rng);
    let mut directed: Vec<(usize, usize)> = graph.edges().iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
    let mut negatives = Vec::with_capacity(config.neg_samples);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut grads: Vec<(usize, Vec<f64>)> = Vec::new();

    for epoch in 0..config.epochs {
        let lr = if epoch < config.burn_in_epochs {
            config.lr / 10.0
        } else {
            config.lr
        };
        directed.shuffle(&mut rng);
        let mut total = 0.0;
        let mut count = 0usize;
        for &(u, v) in &directed {
            sample_negatives(graph, u, v, config.neg_samples, &mut rng, &mut negatives);
            if negatives.is_empty() {
                continue;
            }
            let pu = table.points[u].coords().to_vec();
            let (d_pos, gu_pos, gv_pos) = distance_with_grads(&pu, table.points[v].coords(), c);
            let mut neg_terms = Vec::with_capacity(negatives.len());
            for &w in &negatives {
                neg_terms.push(distance_with_grads(&pu, table.points[w].coords(), c));
            }
            let d_neg: Vec<f64> = neg_terms.iter().map(|t| t.0).collect();
            let (loss, probs) = softmax_loss(d_pos, &d_neg);
            total += loss;
            count += 1;

            // dL/dd_pos = 1 − p_0, dL/dd_j = −p_j
            grads.clear();
            let w0 = 1.0 - probs[0];
            let mut gu: Vec<f64> = gu_pos.iter().map(|g| w0 * g).collect();
            grads.push((v, gv_pos.iter().map(|g| w0 * g).collect()));
            for (j, (&w, (_, gu_n, gw_n))) in negatives.iter().zip(&neg_terms).enumerate() {
                let pj = probs[j + 1];
                gu.iter_mut().zip(gu_n).for_each(|(a, b)| *a -= pj * b);
                grads.push((w, gw_n.iter().map(|g| -pj * g).collect()));
            }
            grads.push((u, gu));
            riemannian_step(&mut table, &grads, lr)?;
        }
        epoch_losses.push(if count == 0 { 0.0 } else { total / count as f64 });
        debug_assert!(table
            .points
            .iter()
            .all(|p| p.euclidean_norm() <= (curvature.radius() - DEFAULT_MARGIN) * (1.0 + 1e-12)));
    }
    Ok(EmbedOutcome { table, epoch_losses })
}
