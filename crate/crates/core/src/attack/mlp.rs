//! Binary classifier used by the attack: two ReLU hidden layers and a
//! sigmoid output, trained full-batch with Adam on binary cross-entropy.

use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight and bias gradients, one pair per layer.
type LayerGrads = Vec<(Array2<f64>, Array1<f64>)>;

#[derive(Clone, Debug, PartialEq)]
pub struct AttackMlp {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
    mean: Array1<f64>,
    scale: Array1<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            epochs: 300,
            lr: 0.01,
            seed: 0,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    crate::gnn::logistic(x)
}

struct Trace {
    inputs: Vec<Array2<f64>>,
    pre: Vec<Array2<f64>>,
}

impl AttackMlp {
    pub fn init(in_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = [in_dim, hidden, hidden, 1];
        let layers = dims
            .windows(2)
            .map(|w| {
                let a = (6.0 / (w[0] + w[1]) as f64).sqrt();
                (
                    Array2::from_shape_simple_fn((w[0], w[1]), || rng.gen_range(-a..a)),
                    Array1::zeros(w[1]),
                )
            })
            .collect();
        Self {
            layers,
            mean: Array1::zeros(in_dim),
            scale: Array1::ones(in_dim),
        }
    }

    fn standardize(&self, x: &Array2<f64>) -> Array2<f64> {
        (x - &self.mean) / &self.scale
    }

    fn forward_raw(&self, x: &Array2<f64>) -> (Array1<f64>, Trace) {
        let mut h = x.clone();
        let mut trace = Trace {
            inputs: Vec::new(),
            pre: Vec::new(),
        };
        let last = self.layers.len() - 1;
        for (i, (w, b)) in self.layers.iter().enumerate() {
            let z = h.dot(w) + b;
            trace.inputs.push(h);
            h = if i < last { z.mapv(|v| v.max(0.0)) } else { z.clone() };
            trace.pre.push(z);
        }
        (h.column(0).to_owned(), trace)
    }

    /// Membership scores in `[0, 1]`.
    pub fn predict(&self, x: &Array2<f64>) -> Vec<f64> {
        let (logit, _) = self.forward_raw(&self.standardize(x));
        logit.iter().map(|&v| sigmoid(v)).collect()
    }

    /// Mean binary cross-entropy on standardised inputs and the gradients of
    /// every layer.
    fn loss_and_grads(&self, x: &Array2<f64>, y: &[f64]) -> (f64, LayerGrads) {
        let (logit, trace) = self.forward_raw(x);
        let n = y.len() as f64;
        let loss = logit
            .iter()
            .zip(y)
            .map(|(&z, &t)| z.max(0.0) - z * t + (-z.abs()).exp().ln_1p())
            .sum::<f64>()
            / n;
        let mut g: Array2<f64> = Array2::from_shape_fn((y.len(), 1), |(i, _)| (sigmoid(logit[i]) - y[i]) / n);
        let mut grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let gw = trace.inputs[i].t().dot(&g);
            let gb = g.sum_axis(Axis(0));
            grads.push((gw, gb));
            if i > 0 {
                let mut gh = g.dot(&self.layers[i].0.t());
                Zip::from(&mut gh).and(&trace.pre[i - 1]).for_each(|d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                g = gh;
            }
        }
        grads.reverse();
        (loss, grads)
    }

    /// Fits on `(x, y)` with `y ∈ {0, 1}`. Inputs are standardised with the
    /// training mean and spread.
    pub fn fit(x: &Array2<f64>, y: &[f64], cfg: &MlpConfig) -> Result<(Self, Vec<f64>)> {
        if x.nrows() != y.len() || y.is_empty() {
            return Err(Error::param("attack training set is empty or misaligned"));
        }
        let mut model = Self::init(x.ncols(), cfg.hidden, cfg.seed);
        model.mean = x.mean_axis(Axis(0)).unwrap();
        model.scale = x.std_axis(Axis(0), 0.0).mapv(|s| if s > 1e-12 { s } else { 1.0 });
        let xs = model.standardize(x);
        let mut m: Vec<(Array2<f64>, Array1<f64>)> = model
            .layers
            .iter()
            .map(|(w, b)| (Array2::zeros(w.raw_dim()), Array1::zeros(b.raw_dim())))
            .collect();
        let mut v = m.clone();
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let mut losses = Vec::with_capacity(cfg.epochs);
        for t in 1..=cfg.epochs as i32 {
            let (loss, grads) = model.loss_and_grads(&xs, y);
            if !loss.is_finite() {
                return Err(Error::Numeric("attack loss diverged".into()));
            }
            losses.push(loss);
            let c1 = 1.0 - b1.powi(t);
            let c2 = 1.0 - b2.powi(t);
            for (((w, b), (gw, gb)), ((mw, mb), (vw, vb))) in
                model.layers.iter_mut().zip(&grads).zip(m.iter_mut().zip(v.iter_mut()))
            {
                Zip::from(w).and(gw).and(mw).and(vw).for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
                Zip::from(b).and(gb).and(mb).and(vb).for_each(|p, &g, m, v| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= cfg.lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
            }
        }
        Ok((model, losses))
    }
}
