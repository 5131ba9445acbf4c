#![allow(dead_code)]

use ndarray::{array, Array2};
use poindp::data::{GraphDataset, Masks};
use poindp::dp::SensitivityPair;
use poindp::gnn::{
    backward, draw_noise, gcn_forward, task_loss, ModelParams, NoiseDraw, NoiseMode, PreparedGraph, TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Six nodes, two triangles joined by one edge.
pub fn six_node_graph() -> GraphDataset {
    let x = array![
        [1.0, 0.2, -0.3],
        [0.8, -0.5, 0.1],
        [0.3, 0.9, 0.4],
        [-0.6, 0.4, 1.1],
        [-1.0, -0.2, 0.5],
        [0.1, -0.9, -0.7]
    ];
    let mut masks = Masks::empty(6);
    masks.train = vec![true, true, false, true, true, false];
    masks.test = vec![false, false, true, false, false, true];
    GraphDataset::new(
        "six",
        6,
        &[(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)],
        x,
        vec![0, 0, 1, 1, 2, 2],
        masks,
    )
    .unwrap()
}

/// Largest entry-wise relative error between analytic and central-difference
/// gradients of the task loss, over W1, W2 and the split logit. The
/// denominator is floored at `1e-6` so exactly-zero entries compare on an
/// absolute scale.
pub fn max_gradient_error(mode: NoiseMode) -> f64 {
    let ds = six_node_graph();
    let pg = PreparedGraph::new(&ds);
    let cfg = TrainConfig {
        noise_mode: mode,
        hidden_dim: 4,
        clip_bound: 0.6,
        ..TrainConfig::default()
    };
    let sens = SensitivityPair::new(0.05, 0.03).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draw = draw_noise(mode, sens, &cfg, 6, 4, &mut rng);
    let params = ModelParams::init(3, 4, 3, 0.35, 5).unwrap();
    let labels = ds.labels().to_vec();
    let mask = ds.masks().train.clone();
    let loss = |p: &ModelParams| {
        let (logits, _) = gcn_forward(&pg, p, &draw).unwrap();
        task_loss(&logits, &labels, &mask).unwrap()
    };
    let (_, cache) = gcn_forward(&pg, &params, &draw).unwrap();
    let g = backward(&pg, &params, &cache, &labels, &mask).unwrap();
    if matches!(draw, NoiseDraw::None) || matches!(draw, NoiseDraw::Euclidean { .. }) {
        assert_eq!(g.beta_logit, 0.0);
    }
    let h = 1e-6;
    let rel = |a: f64, f: f64| (a - f).abs() / a.abs().max(f.abs()).max(1e-6);
    let mut worst = 0.0f64;
    for which in 0..2 {
        let shape = if which == 0 { params.w1.dim() } else { params.w2.dim() };
        for i in 0..shape.0 {
            for j in 0..shape.1 {
                let bump = |d: f64| {
                    let mut w1 = params.w1.clone();
                    let mut w2 = params.w2.clone();
                    if which == 0 {
                        w1[[i, j]] += d;
                    } else {
                        w2[[i, j]] += d;
                    }
                    loss(&ModelParams::new(w1, w2, params.beta_logit).unwrap())
                };
                let fd = (bump(h) - bump(-h)) / (2.0 * h);
                let an = if which == 0 { g.w1[[i, j]] } else { g.w2[[i, j]] };
                worst = worst.max(rel(an, fd));
            }
        }
    }
    let bump_b = |d: f64| loss(&ModelParams::new(params.w1.clone(), params.w2.clone(), params.beta_logit + d).unwrap());
    let fd = (bump_b(h) - bump_b(-h)) / (2.0 * h);
    worst.max(rel(g.beta_logit, fd))
}

pub fn dense(rows: &[&[f64]]) -> Array2<f64> {
    let c = rows[0].len();
    Array2::from_shape_vec((rows.len(), c), rows.iter().flat_map(|r| r.iter().copied()).collect()).unwrap()
}
