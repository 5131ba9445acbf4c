//! Two-layer graph convolution with a noise-perturbed hidden layer and
//! hand-derived gradients.
//!
//! ```text
//! Z1 = Â X W1,  H = relu(Z1),  Ĥ = H + η,  logits = Â Ĥ W2
//! ```
//!
//! `Â = D^{-1/2}(A + I)D^{-1/2}`. In the Euclidean arms the rows of `H` are
//! clipped to a fixed L2 bound before the noise is added.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::GraphDataset;
use crate::dp::{self, SensitivityPair, LAMBDA_ORIGIN};
use crate::error::{Error, Result};

/// Symmetrically normalised adjacency with self-loops, in compressed rows.
#[derive(Clone, Debug)]
pub struct NormalizedAdjacency {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn new(graph: &GraphDataset) -> Self {
        let n = graph.num_nodes();
        let deg: Vec<f64> = (0..n).map(|u| graph.degree(u) as f64 + 1.0).collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for u in 0..n {
            let mut row: Vec<usize> = graph.neighbors(u).to_vec();
            row.push(u);
            row.sort_unstable();
            for v in row {
                cols.push(v);
                vals.push(1.0 / (deg[u] * deg[v]).sqrt());
            }
            offsets.push(cols.len());
        }
        Self { offsets, cols, vals }
    }

    pub fn num_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// `Â M`. `Â` is symmetric, so this also serves for `Âᵀ M`.
    pub fn propagate(&self, m: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(m.raw_dim());
        for (u, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            for k in self.offsets[u]..self.offsets[u + 1] {
                row.scaled_add(self.vals[k], &m.row(self.cols[k]));
            }
        }
        out
    }

    /// Dense copy, for tests and small graphs.
    pub fn to_dense(&self) -> Array2<f64> {
        let n = self.num_nodes();
        let mut d = Array2::zeros((n, n));
        for u in 0..n {
            for k in self.offsets[u]..self.offsets[u + 1] {
                d[[u, self.cols[k]]] = self.vals[k];
            }
        }
        d
    }
}

/// The graph with its first propagation `Â X` precomputed; features are
/// fixed during training so this product never changes.
#[derive(Clone, Debug)]
pub struct PreparedGraph {
    pub adj: NormalizedAdjacency,
    pub ax: Array2<f64>,
}

impl PreparedGraph {
    pub fn new(graph: &GraphDataset) -> Self {
        Self::with_features(graph, graph.features())
    }

    pub fn with_features(graph: &GraphDataset, features: &Array2<f64>) -> Self {
        let adj = NormalizedAdjacency::new(graph);
        let ax = adj.propagate(features);
        Self { adj, ax }
    }

    pub fn num_nodes(&self) -> usize {
        self.ax.nrows()
    }

    pub fn num_features(&self) -> usize {
        self.ax.ncols()
    }
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `(β·ε, (1−β)·ε)` with `β = logistic(beta_logit)`.
pub fn split_budget(beta_logit: f64, epsilon: f64) -> (f64, f64) {
    dp::split_epsilon(logistic(beta_logit), epsilon)
}

/// Layer weights and the budget-split logit.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    pub beta_logit: f64,
    version: u64,
}

fn glorot<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.gen_range(-a..a))
}

impl ModelParams {
    pub fn new(w1: Array2<f64>, w2: Array2<f64>, beta_logit: f64) -> Result<Self> {
        if w1.ncols() != w2.nrows() {
            return Err(Error::DimensionMismatch {
                expected: w1.ncols(),
                got: w2.nrows(),
            });
        }
        if !beta_logit.is_finite() || w1.iter().chain(w2.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            w1,
            w2,
            beta_logit,
            version: 0,
        })
    }

    /// Glorot-uniform weights; `beta` sets the initial budget split.
    pub fn init(in_dim: usize, hidden: usize, classes: usize, beta: f64, seed: u64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::param(format!("initial beta {beta} outside (0, 1)")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = glorot(in_dim, hidden, &mut rng);
        let w2 = glorot(hidden, classes, &mut rng);
        Self::new(w1, w2, (beta / (1.0 - beta)).ln())
    }

    pub fn beta(&self) -> f64 {
        logistic(self.beta_logit)
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.w2.ncols()
    }

    /// Incremented on every in-place update; caches remember the version they
    /// were computed from.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub(crate) fn touch(&mut self) {
        self.version += 1;
    }

    /// Text checkpoint: a `beta_logit` line, then each matrix as a
    /// `name rows cols` header followed by row-major values.
    pub fn to_text(&self) -> String {
        let mut out = format!("beta_logit {}\n", self.beta_logit);
        for (name, m) in [("w1", &self.w1), ("w2", &self.w2)] {
            let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
            for row in m.rows() {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: &str| Error::Parse {
            path: "<checkpoint>".into(),
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (ln, first) = lines.next().ok_or(Error::Empty("checkpoint"))?;
        let beta_logit = first
            .strip_prefix("beta_logit ")
            .and_then(|v| v.trim().parse::<f64>().ok())
            .ok_or_else(|| bad(ln + 1, "expected beta_logit"))?;
        let mut mats = Vec::new();
        for name in ["w1", "w2"] {
            let (ln, header) = lines.next().ok_or_else(|| bad(0, "missing matrix"))?;
            let toks: Vec<&str> = header.split_whitespace().collect();
            if toks.len() != 3 || toks[0] != name {
                return Err(bad(ln + 1, "expected matrix header"));
            }
            let r: usize = toks[1].parse().map_err(|_| bad(ln + 1, "bad row count"))?;
            let c: usize = toks[2].parse().map_err(|_| bad(ln + 1, "bad column count"))?;
            let mut vals = Vec::with_capacity(r * c);
            for _ in 0..r {
                let (ln, row) = lines.next().ok_or_else(|| bad(0, "truncated matrix"))?;
                let parsed = row
                    .split_whitespace()
                    .map(str::parse::<f64>)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| bad(ln + 1, "bad value"))?;
                if parsed.len() != c {
                    return Err(bad(ln + 1, "wrong row length"));
                }
                vals.extend(parsed);
            }
            mats.push(Array2::from_shape_vec((r, c), vals).map_err(|e| Error::Data(e.to_string()))?);
        }
        let w2 = mats.pop().unwrap();
        let w1 = mats.pop().unwrap();
        Self::new(w1, w2, beta_logit)
    }
}

/// The noise injected into the hidden layer for one step, in reparameterised
/// form so the forward pass can recompute `σ` from the current `β`.
#[derive(Clone, Debug)]
pub enum NoiseDraw {
    None,
    /// `η = (σ_r/λ_0) ζ_r + (σ_α/λ_0) ζ_α`, with `σ_r` calibrated on
    /// `β·ε` and `σ_α` on `(1−β)·ε`. A missing draw removes that term.
    Hierarchy {
        sens: SensitivityPair,
        epsilon: f64,
        delta: f64,
        zeta_r: Option<Array2<f64>>,
        zeta_alpha: Option<Array2<f64>>,
    },
    /// Rows of `H` clipped to `clip`, then `η = scale · ζ`.
    Euclidean {
        clip: f64,
        scale: f64,
        zeta: Array2<f64>,
    },
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    version: u64,
    pub z1: Array2<f64>,
    /// Hidden layer after activation (and clipping, in the Euclidean arms).
    pub hidden: Array2<f64>,
    /// Noise actually added.
    pub noise: Array2<f64>,
    pub h_hat: Array2<f64>,
    pub ah: Array2<f64>,
    pub logits: Array2<f64>,
    pub sigma_r: f64,
    pub sigma_alpha: f64,
    pub epsilon_r: f64,
    pub epsilon_alpha: f64,
    draw: NoiseDraw,
}

impl ForwardCache {
    pub fn version(&self) -> u64 {
        self.version
    }

    /// Mean L2 norm of the per-node noise rows.
    pub fn mean_noise_norm(&self) -> f64 {
        row_norms(&self.noise).mean().unwrap_or(0.0)
    }
}

pub(crate) fn row_norms(m: &Array2<f64>) -> Array1<f64> {
    m.map_axis(Axis(1), |r| r.dot(&r).sqrt())
}

fn check_noise_shape(z: &Array2<f64>, rows: usize, cols: usize) -> Result<()> {
    if z.dim() != (rows, cols) {
        return Err(Error::DimensionMismatch {
            expected: rows * cols,
            got: z.len(),
        });
    }
    Ok(())
}

/// Scale applied to each row by the clip: `min(1, C/‖h‖)`.
fn clip_factors(h: &Array2<f64>, clip: f64) -> Array1<f64> {
    row_norms(h).mapv(|n| if n > clip { clip / n } else { 1.0 })
}

/// `ĥ = h + η`; rows of `noise` line up with rows of `h`.
pub fn perturb_hidden(h: &Array2<f64>, noise: &Array2<f64>) -> Result<Array2<f64>> {
    if h.dim() != noise.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.len(),
            got: noise.len(),
        });
    }
    Ok(h + noise)
}

/// Runs the model. Returns logits and the cache needed by [`backward`].
pub fn gcn_forward(
    graph: &PreparedGraph,
    params: &ModelParams,
    draw: &NoiseDraw,
) -> Result<(Array2<f64>, ForwardCache)> {
    if graph.num_features() != params.w1.nrows() {
        return Err(Error::DimensionMismatch {
            expected: params.w1.nrows(),
            got: graph.num_features(),
        });
    }
    let n = graph.num_nodes();
    let hdim = params.hidden_dim();
    let z1 = graph.ax.dot(&params.w1);
    let mut hidden = z1.mapv(|v| v.max(0.0));
    let (mut sigma_r, mut sigma_alpha, mut epsilon_r, mut epsilon_alpha) = (0.0, 0.0, 0.0, 0.0);
    let noise = match draw {
        NoiseDraw::None => Array2::zeros((n, hdim)),
        NoiseDraw::Hierarchy {
            sens,
            epsilon,
            delta,
            zeta_r,
            zeta_alpha,
        } => {
            (epsilon_r, epsilon_alpha) = split_budget(params.beta_logit, *epsilon);
            let mut eta = Array2::zeros((n, hdim));
            if let Some(z) = zeta_r {
                check_noise_shape(z, n, hdim)?;
                sigma_r = dp::calibrate_sigma(sens.delta_r, epsilon_r, *delta)?;
                eta.scaled_add(sigma_r / LAMBDA_ORIGIN, z);
            }
            if let Some(z) = zeta_alpha {
                check_noise_shape(z, n, hdim)?;
                sigma_alpha = dp::calibrate_sigma(sens.delta_alpha, epsilon_alpha, *delta)?;
                eta.scaled_add(sigma_alpha / LAMBDA_ORIGIN, z);
            }
            eta
        }
        NoiseDraw::Euclidean { clip, scale, zeta } => {
            check_noise_shape(zeta, n, hdim)?;
            let f = clip_factors(&hidden, *clip);
            hidden *= &f.insert_axis(Axis(1));
            sigma_r = *scale;
            zeta * *scale
        }
    };
    if !sigma_r.is_finite() || !sigma_alpha.is_finite() {
        return Err(Error::Numeric(format!(
            "noise scale overflow ({sigma_r}, {sigma_alpha})"
        )));
    }
    let h_hat = perturb_hidden(&hidden, &noise)?;
    let ah = graph.adj.propagate(&h_hat);
    let logits = ah.dot(&params.w2);
    let cache = ForwardCache {
        version: params.version,
        z1,
        hidden,
        noise,
        h_hat,
        ah,
        logits: logits.clone(),
        sigma_r,
        sigma_alpha,
        epsilon_r,
        epsilon_alpha,
        draw: draw.clone(),
    };
    Ok((logits, cache))
}

/// Row-wise softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut p = logits.clone();
    for mut row in p.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - m).exp());
        let s = row.sum();
        row /= s;
    }
    p
}

fn masked_nodes(mask: &[bool], labels: &[usize], rows: usize) -> Result<Vec<usize>> {
    if mask.len() != rows || labels.len() != rows {
        return Err(Error::DimensionMismatch {
            expected: rows,
            got: mask.len().min(labels.len()),
        });
    }
    let nodes = crate::data::indices(mask);
    if nodes.is_empty() {
        return Err(Error::Empty("label mask"));
    }
    Ok(nodes)
}

/// Mean cross-entropy over the masked nodes.
pub fn task_loss(logits: &Array2<f64>, labels: &[usize], mask: &[bool]) -> Result<f64> {
    let nodes = masked_nodes(mask, labels, logits.nrows())?;
    let mut total = 0.0;
    for &u in &nodes {
        let row = logits.row(u);
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - row[labels[u]];
    }
    Ok(total / nodes.len() as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    pub beta_logit: f64,
}

/// Gradients of [`task_loss`] with respect to every parameter, holding the
/// raw noise draws fixed.
pub fn backward(
    graph: &PreparedGraph,
    params: &ModelParams,
    cache: &ForwardCache,
    labels: &[usize],
    mask: &[bool],
) -> Result<Gradients> {
    if cache.version != params.version {
        return Err(Error::StaleCache {
            cache: cache.version,
            params: params.version,
        });
    }
    let nodes = masked_nodes(mask, labels, cache.logits.nrows())?;
    let m = nodes.len() as f64;
    let probs = softmax_rows(&cache.logits);
    let mut g = Array2::zeros(cache.logits.raw_dim());
    for &u in &nodes {
        let mut row = g.row_mut(u);
        row.assign(&probs.row(u));
        row[labels[u]] -= 1.0;
        row /= m;
    }
    let w2 = cache.ah.t().dot(&g);
    let d_ah = g.dot(&params.w2.t());
    let d_hhat = graph.adj.propagate(&d_ah);

    let mut beta_logit = 0.0;
    let mut d_hidden = d_hhat.clone();
    match &cache.draw {
        NoiseDraw::None => {}
        NoiseDraw::Hierarchy { zeta_r, zeta_alpha, .. } => {
            let beta = params.beta();
            let mut d_beta = 0.0;
            if let Some(z) = zeta_r {
                // σ_r ∝ 1/β
                let d_sigma = (&d_hhat * z).sum() / LAMBDA_ORIGIN;
                d_beta += d_sigma * (-cache.sigma_r / beta);
            }
            if let Some(z) = zeta_alpha {
                // σ_α ∝ 1/(1−β)
                let d_sigma = (&d_hhat * z).sum() / LAMBDA_ORIGIN;
                d_beta += d_sigma * (cache.sigma_alpha / (1.0 - beta));
            }
            beta_logit = d_beta * beta * (1.0 - beta);
        }
        NoiseDraw::Euclidean { clip, .. } => {
            // Back through h_c = h·min(1, C/‖h‖) using the pre-clip rows.
            let raw = cache.z1.mapv(|v| v.max(0.0));
            for ((mut dh, r), gh) in d_hidden.rows_mut().into_iter().zip(raw.rows()).zip(d_hhat.rows()) {
                let n = r.dot(&r).sqrt();
                if n > *clip {
                    let proj = r.dot(&gh) / (n * n);
                    Zip::from(&mut dh)
                        .and(&r)
                        .and(&gh)
                        .for_each(|d, &ri, &gi| *d = clip / n * (gi - ri * proj));
                }
            }
        }
    }
    Zip::from(&mut d_hidden).and(&cache.z1).for_each(|d, &z| {
        if z <= 0.0 {
            *d = 0.0;
        }
    });
    let w1 = graph.ax.t().dot(&d_hidden);
    Ok(Gradients { w1, w2, beta_logit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Masks;
    use ndarray::array;

    fn path4() -> GraphDataset {
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, -1.0]];
        let mut masks = Masks::empty(4);
        masks.train = vec![true, true, false, false];
        GraphDataset::new("p4", 4, &[(0, 1), (1, 2), (2, 3)], x, vec![0, 1, 0, 1], masks).unwrap()
    }

    #[test]
    fn single_node_identity() {
        let x = array![[0.5, -2.0]];
        let g = GraphDataset::new("one", 1, &[], x.clone(), vec![0], Masks::empty(1)).unwrap();
        let pg = PreparedGraph::new(&g);
        let p = ModelParams::new(Array2::eye(2), Array2::eye(2), 0.0).unwrap();
        let (logits, cache) = gcn_forward(&pg, &p, &NoiseDraw::None).unwrap();
        assert_eq!(cache.hidden, array![[0.5, 0.0]]);
        assert_eq!(logits, array![[0.5, 0.0]]);
    }

    #[test]
    fn path_graph_matches_dense_oracle() {
        let g = path4();
        // Â by hand: degrees with self-loops are 2, 3, 3, 2.
        let d = [2.0f64, 3.0, 3.0, 2.0];
        let mut a = Array2::<f64>::zeros((4, 4));
        for (u, v) in [
            (0, 0),
            (1, 1),
            (2, 2),
            (3, 3),
            (0, 1),
            (1, 0),
            (1, 2),
            (2, 1),
            (2, 3),
            (3, 2),
        ] {
            a[[u, v]] = 1.0 / (d[u] * d[v]).sqrt();
        }
        let pg = PreparedGraph::new(&g);
        assert!((&pg.adj.to_dense() - &a).iter().all(|v| v.abs() < 1e-15));
        let w1 = array![[0.1, -0.2, 0.3], [0.4, 0.5, -0.6]];
        let w2 = array![[0.2, -0.1], [0.3, 0.7], [-0.5, 0.4]];
        let p = ModelParams::new(w1.clone(), w2.clone(), 0.0).unwrap();
        let (logits, _) = gcn_forward(&pg, &p, &NoiseDraw::None).unwrap();
        let h = a.dot(g.features()).dot(&w1).mapv(|v: f64| v.max(0.0));
        let oracle = a.dot(&h).dot(&w2);
        assert!((&logits - &oracle).iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn components_are_independent() {
        let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, -1.0]];
        let g = GraphDataset::new("two", 4, &[(0, 1), (2, 3)], x.clone(), vec![0; 4], Masks::empty(4)).unwrap();
        let mut x2 = x;
        x2[[2, 0]] = 9.0;
        x2[[3, 1]] = -4.0;
        let p = ModelParams::init(2, 3, 2, 0.5, 1).unwrap();
        let (a, _) = gcn_forward(&PreparedGraph::new(&g), &p, &NoiseDraw::None).unwrap();
        let (b, _) = gcn_forward(&PreparedGraph::with_features(&g, &x2), &p, &NoiseDraw::None).unwrap();
        assert_eq!(a.row(0), b.row(0));
        assert_eq!(a.row(1), b.row(1));
        assert_ne!(a.row(2), b.row(2));
    }

    #[test]
    fn split_budget_limits() {
        assert_eq!(split_budget(0.0, 0.6), (0.3, 0.3));
        let (r, a) = split_budget(800.0, 0.6);
        assert_eq!((r, a), (0.6, 0.0));
        assert_eq!(logistic(-800.0), 0.0);
    }

    #[test]
    fn loss_values() {
        let uniform = Array2::zeros((3, 4));
        let l = task_loss(&uniform, &[0, 1, 2], &[true; 3]).unwrap();
        assert!((l - 4f64.ln()).abs() < 1e-15);
        let sharp = array![[100.0, 0.0], [0.0, 100.0]];
        assert!(task_loss(&sharp, &[0, 1], &[true, true]).unwrap() < 1e-40);
        assert!(task_loss(&sharp, &[0, 1], &[false, false]).is_err());
        // five nodes, hand softmax
        let logits = array![
            [1.0, 2.0, 0.5],
            [0.0, 0.0, 3.0],
            [-1.0, 1.0, 1.0],
            [2.0, 2.0, 2.0],
            [0.3, -0.7, 0.1]
        ];
        let labels = [1, 2, 0, 1, 2];
        let mask = [true, true, true, false, true];
        let mut s = 0.0;
        for u in [0usize, 1, 2, 4] {
            let z: f64 = (0..3).map(|k| f64::exp(logits[[u, k]])).sum();
            s += -(f64::exp(logits[[u, labels[u]]]) / z).ln();
        }
        assert!((task_loss(&logits, &labels, &mask).unwrap() - s / 4.0).abs() < 1e-14);
    }

    #[test]
    fn perturb_adds_and_checks_shape() {
        let h = array![[1.0, 2.0]];
        assert_eq!(perturb_hidden(&h, &Array2::zeros((1, 2))).unwrap(), h);
        assert!(perturb_hidden(&h, &Array2::zeros((2, 2))).is_err());
    }

    #[test]
    fn stale_cache_rejected() {
        let g = path4();
        let pg = PreparedGraph::new(&g);
        let mut p = ModelParams::init(2, 3, 2, 0.5, 0).unwrap();
        let (_, cache) = gcn_forward(&pg, &p, &NoiseDraw::None).unwrap();
        p.touch();
        let err = backward(&pg, &p, &cache, g.labels(), &g.masks().train).unwrap_err();
        assert!(matches!(err, Error::StaleCache { .. }));
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = ModelParams::init(5, 4, 3, 0.3, 9).unwrap();
        let q = ModelParams::from_text(&p.to_text()).unwrap();
        assert_eq!(p, q);
        assert!(ModelParams::from_text("beta_logit 0\nw1 1 2\n1\n").is_err());
    }
}
