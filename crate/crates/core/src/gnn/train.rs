//! The training loop: per-epoch sensitivities, fresh noise, forward,
//! backward and an Adam step.

use std::fmt::Write as _;

use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::Laplace;

use super::metrics::{micro_f1, weighted_f1};
use super::model::{backward, gcn_forward, softmax_rows, task_loss, ModelParams, NoiseDraw, PreparedGraph};
use super::{NoiseMode, TrainConfig};
use crate::data::GraphDataset;
use crate::dp::{hierarchy_sensitivities, standard_normal_matrix, SensitivityPair};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    /// Test-mask scores of the noise-free model after this epoch's update.
    pub weighted_f1: f64,
    pub micro_f1: f64,
    pub epsilon_r: f64,
    pub epsilon_alpha: f64,
    pub sigma_r: f64,
    pub sigma_alpha: f64,
    pub mean_noise_norm: f64,
    pub beta: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EvalScores {
    pub weighted_f1: f64,
    pub micro_f1: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub metrics: Vec<EpochMetrics>,
    pub sensitivities: Option<SensitivityPair>,
    pub train: EvalScores,
    pub val: EvalScores,
    pub test: EvalScores,
}

/// Class posteriors of the noise-free model.
pub fn predict_proba(graph: &PreparedGraph, params: &ModelParams) -> Result<Array2<f64>> {
    let (logits, _) = gcn_forward(graph, params, &NoiseDraw::None)?;
    Ok(softmax_rows(&logits))
}

fn argmax_rows(m: &Array2<f64>) -> Vec<usize> {
    m.rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |best, (i, &v)| if v > best.1 { (i, v) } else { best },
                )
                .0
        })
        .collect()
}

/// Weighted and micro F1 of the noise-free model on `nodes`.
pub fn evaluate(
    graph: &PreparedGraph,
    params: &ModelParams,
    dataset: &GraphDataset,
    nodes: &[usize],
) -> Result<EvalScores> {
    let (logits, _) = gcn_forward(graph, params, &NoiseDraw::None)?;
    let pred = argmax_rows(&logits);
    Ok(EvalScores {
        weighted_f1: weighted_f1(&pred, dataset.labels(), nodes, dataset.num_classes()),
        micro_f1: micro_f1(&pred, dataset.labels(), nodes),
    })
}

/// Raw draws for one epoch. The hierarchy arms always draw both `ζ_r` and
/// `ζ_α` so that all of them consume the generator identically; the
/// ablations then drop one term.
pub fn draw_noise<R: Rng + ?Sized>(
    mode: NoiseMode,
    sens: SensitivityPair,
    config: &TrainConfig,
    rows: usize,
    dim: usize,
    rng: &mut R,
) -> NoiseDraw {
    let eps = config.budget.epsilon();
    let delta = config.budget.delta();
    match mode {
        NoiseMode::None => NoiseDraw::None,
        NoiseMode::Poindp | NoiseMode::NoInter | NoiseMode::NoIntra | NoiseMode::NoAllocate => {
            let zr = standard_normal_matrix(rows, dim, rng);
            let za = standard_normal_matrix(rows, dim, rng);
            NoiseDraw::Hierarchy {
                sens,
                epsilon: eps,
                delta,
                zeta_r: (mode != NoiseMode::NoInter).then_some(zr),
                zeta_alpha: (mode != NoiseMode::NoIntra).then_some(za),
            }
        }
        NoiseMode::EuclideanGauss => NoiseDraw::Euclidean {
            clip: config.clip_bound,
            scale: (2.0 * (1.25 / delta).ln()).sqrt() * config.clip_bound / eps,
            zeta: standard_normal_matrix(rows, dim, rng),
        },
        NoiseMode::EuclideanLaplace => {
            let lap = Laplace::new(0.0, 1.0).expect("unit Laplace");
            NoiseDraw::Euclidean {
                clip: config.clip_bound,
                // L1 sensitivity of a row with L2 norm ≤ C is C√d
                scale: config.clip_bound * (dim as f64).sqrt() / eps,
                zeta: Array2::from_shape_simple_fn((rows, dim), || rng.sample(lap)),
            }
        }
    }
}

const ADAM_B1: f64 = 0.9;
const ADAM_B2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates for every parameter.
struct Adam {
    lr: f64,
    t: i32,
    m1: Array2<f64>,
    v1: Array2<f64>,
    m2: Array2<f64>,
    v2: Array2<f64>,
    mb: f64,
    vb: f64,
}

fn adam_update(w: &mut f64, g: f64, m: &mut f64, v: &mut f64, lr: f64, t: i32) {
    *m = ADAM_B1 * *m + (1.0 - ADAM_B1) * g;
    *v = ADAM_B2 * *v + (1.0 - ADAM_B2) * g * g;
    let mh = *m / (1.0 - ADAM_B1.powi(t));
    let vh = *v / (1.0 - ADAM_B2.powi(t));
    *w -= lr * mh / (vh.sqrt() + ADAM_EPS);
}

impl Adam {
    fn new(p: &ModelParams, lr: f64) -> Self {
        Self {
            lr,
            t: 0,
            m1: Array2::zeros(p.w1.raw_dim()),
            v1: Array2::zeros(p.w1.raw_dim()),
            m2: Array2::zeros(p.w2.raw_dim()),
            v2: Array2::zeros(p.w2.raw_dim()),
            mb: 0.0,
            vb: 0.0,
        }
    }

    fn step(&mut self, p: &mut ModelParams, g1: &Array2<f64>, g2: &Array2<f64>, gb: Option<f64>) {
        self.t += 1;
        let (lr, t) = (self.lr, self.t);
        Zip::from(&mut p.w1)
            .and(g1)
            .and(&mut self.m1)
            .and(&mut self.v1)
            .for_each(|w, &g, m, v| adam_update(w, g, m, v, lr, t));
        Zip::from(&mut p.w2)
            .and(g2)
            .and(&mut self.m2)
            .and(&mut self.v2)
            .for_each(|w, &g, m, v| adam_update(w, g, m, v, lr, t));
        if let Some(g) = gb {
            adam_update(&mut p.beta_logit, g, &mut self.mb, &mut self.vb, lr, t);
        }
        p.touch();
    }
}

/// Trains the model following the perturbed-training loop: every epoch
/// computes the sensitivities of the training nodes, draws fresh noise,
/// perturbs the hidden layer, and takes one optimiser step.
pub fn train_poindp(
    dataset: &GraphDataset,
    table: Option<&EmbeddingTable>,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let mode = config.noise_mode;
    let n = dataset.num_nodes();
    let train_nodes = dataset.masks().train_nodes();
    if train_nodes.is_empty() {
        return Err(Error::Empty("training mask"));
    }
    let table = match (mode.needs_embedding(), table) {
        (true, None) => return Err(Error::param(format!("noise mode {mode} needs an embedding table"))),
        (true, Some(t)) if t.len() != n => {
            return Err(Error::param(format!(
                "embedding table has {} rows, dataset {n}",
                t.len()
            )))
        }
        (_, t) => t,
    };
    let graph = PreparedGraph::new(dataset);
    let mut params = ModelParams::init(
        dataset.num_features(),
        config.hidden_dim,
        dataset.num_classes(),
        config.budget.beta(),
        config.seed,
    )?;
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
    noise_rng.set_stream(1);
    let mut adam = Adam::new(&params, config.lr);
    let labels = dataset.labels();
    let mask = &dataset.masks().train;
    let test_nodes = dataset.masks().test_nodes();
    let mut metrics = Vec::with_capacity(config.epochs);
    let mut sensitivities = None;

    for epoch in 1..=config.epochs {
        let sens = match table {
            Some(t) if mode.needs_embedding() => {
                let s = hierarchy_sensitivities(t, &train_nodes, config.clip_tau)?;
                sensitivities = Some(s);
                s
            }
            _ => SensitivityPair::zero(),
        };
        let draw = draw_noise(mode, sens, config, n, config.hidden_dim, &mut noise_rng);
        let (logits, cache) = gcn_forward(&graph, &params, &draw)?;
        let loss = task_loss(&logits, labels, mask)?;
        let mut grads = backward(&graph, &params, &cache, labels, mask)?;
        if config.weight_decay > 0.0 {
            grads.w1.scaled_add(config.weight_decay, &params.w1);
        }
        if !loss.is_finite() || grads.w1.iter().chain(grads.w2.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite loss or gradient at epoch {epoch}")));
        }
        let beta = params.beta();
        let gb = mode.learns_split().then_some(grads.beta_logit);
        adam.step(&mut params, &grads.w1, &grads.w2, gb);
        let scores = evaluate(&graph, &params, dataset, &test_nodes)?;
        metrics.push(EpochMetrics {
            epoch,
            loss,
            weighted_f1: scores.weighted_f1,
            micro_f1: scores.micro_f1,
            epsilon_r: cache.epsilon_r,
            epsilon_alpha: cache.epsilon_alpha,
            sigma_r: cache.sigma_r,
            sigma_alpha: cache.sigma_alpha,
            mean_noise_norm: cache.mean_noise_norm(),
            beta,
        });
    }
    Ok(TrainOutcome {
        train: evaluate(&graph, &params, dataset, &train_nodes)?,
        val: evaluate(&graph, &params, dataset, &dataset.masks().val_nodes())?,
        test: evaluate(&graph, &params, dataset, &test_nodes)?,
        params,
        metrics,
        sensitivities,
    })
}

/// Metrics as CSV with a header row.
pub fn metrics_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = String::from(
        "epoch,loss,weighted_f1,micro_f1,epsilon_r,epsilon_alpha,sigma_r,sigma_alpha,mean_noise_norm,beta\n",
    );
    for m in metrics {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            m.epoch,
            m.loss,
            m.weighted_f1,
            m.micro_f1,
            m.epsilon_r,
            m.epsilon_alpha,
            m.sigma_r,
            m.sigma_alpha,
            m.mean_noise_norm,
            m.beta
        );
    }
    out
}
