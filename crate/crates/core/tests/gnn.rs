mod common;

use poindp::data::{gen_synthetic, SyntheticSpec};
use poindp::dp::{PrivacyBudget, SensitivityPair, LAMBDA_ORIGIN};
use poindp::embed::{train_poincare_embedding, EmbedConfig};
use poindp::gnn::{
    backward, draw_noise, gcn_forward, train_poindp, ModelParams, NoiseDraw, NoiseMode, PreparedGraph, TrainConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn gradients_match_finite_differences_in_every_arm() {
    for mode in NoiseMode::ALL {
        let err = common::max_gradient_error(mode);
        assert!(err < 1e-4, "{mode}: {err}");
    }
}

#[test]
fn beta_gradient_is_exactly_zero_without_noise() {
    let ds = common::six_node_graph();
    let pg = PreparedGraph::new(&ds);
    let p = ModelParams::init(3, 4, 3, 0.5, 0).unwrap();
    let (_, cache) = gcn_forward(&pg, &p, &NoiseDraw::None).unwrap();
    let g = backward(&pg, &p, &cache, ds.labels(), &ds.masks().train).unwrap();
    assert_eq!(g.beta_logit, 0.0);
}

#[test]
fn perfectly_fit_model_has_tiny_gradients() {
    // constant labels; a huge bias toward class 0 through a constant feature
    let ds = common::six_node_graph();
    let ones = ndarray::Array2::from_elem((6, 3), 1.0);
    let pg = PreparedGraph::with_features(&ds, &ones);
    let w1 = ndarray::Array2::from_elem((3, 2), 1.0);
    let w2 = common::dense(&[&[40.0, 0.0, 0.0], &[40.0, 0.0, 0.0]]);
    let p = ModelParams::new(w1, w2, 0.0).unwrap();
    let (_, cache) = gcn_forward(&pg, &p, &NoiseDraw::None).unwrap();
    let g = backward(&pg, &p, &cache, &[0; 6], &ds.masks().train).unwrap();
    assert!(g.w1.iter().chain(g.w2.iter()).all(|v| v.abs() < 1e-30));
}

#[test]
fn perturbation_variance_matches_calibration() {
    let cfg = TrainConfig {
        budget: PrivacyBudget::new(0.5, 1e-5, 0.3).unwrap(),
        ..TrainConfig::default()
    };
    let sens = SensitivityPair::new(0.4, 0.9).unwrap();
    let rows = 100_000 / 16;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let draw = draw_noise(NoiseMode::Poindp, sens, &cfg, rows, 16, &mut rng);
    let NoiseDraw::Hierarchy {
        zeta_r: Some(zr),
        zeta_alpha: Some(za),
        ..
    } = &draw
    else {
        panic!("expected both draws");
    };
    let (er, ea) = cfg.budget.split();
    let sr = poindp::dp::calibrate_sigma(0.4, er, 1e-5).unwrap();
    let sa = poindp::dp::calibrate_sigma(0.9, ea, 1e-5).unwrap();
    let eta = zr * (sr / LAMBDA_ORIGIN) + za * (sa / LAMBDA_ORIGIN);
    let n = eta.len() as f64;
    let mean = eta.sum() / n;
    let var = eta.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let expected = (sr * sr + sa * sa) / (LAMBDA_ORIGIN * LAMBDA_ORIGIN);
    assert!((var / expected - 1.0).abs() < 0.02, "{var} vs {expected}");
}

#[test]
fn ablation_arms_drop_the_right_term() {
    let cfg = TrainConfig::default();
    let sens = SensitivityPair::new(1.0, 1.0).unwrap();
    let mut a = ChaCha8Rng::seed_from_u64(0);
    let mut b = ChaCha8Rng::seed_from_u64(0);
    let full = draw_noise(NoiseMode::Poindp, sens, &cfg, 3, 2, &mut a);
    let no_inter = draw_noise(NoiseMode::NoInter, sens, &cfg, 3, 2, &mut b);
    match (full, no_inter) {
        (
            NoiseDraw::Hierarchy {
                zeta_alpha: Some(fa),
                zeta_r: Some(_),
                ..
            },
            NoiseDraw::Hierarchy {
                zeta_alpha: Some(na),
                zeta_r: None,
                ..
            },
        ) => assert_eq!(fa, na),
        other => panic!("{other:?}"),
    }
    let mut c = ChaCha8Rng::seed_from_u64(0);
    assert!(matches!(
        draw_noise(NoiseMode::NoIntra, sens, &cfg, 3, 2, &mut c),
        NoiseDraw::Hierarchy {
            zeta_alpha: None,
            zeta_r: Some(_),
            ..
        }
    ));
}

#[test]
fn plain_gcn_fits_two_blocks() {
    let ds = gen_synthetic(&SyntheticSpec::two_block(50, 0)).unwrap();
    let cfg = TrainConfig {
        noise_mode: NoiseMode::None,
        epochs: 100,
        lr: 0.01,
        ..TrainConfig::default()
    };
    let out = train_poindp(&ds, None, &cfg).unwrap();
    assert!(out.train.micro_f1 >= 0.95, "{:?}", out.train);
    assert!(out.metrics.iter().all(|m| m.mean_noise_norm == 0.0));
}

#[test]
fn training_is_deterministic_and_budget_splits_exactly() {
    let ds = gen_synthetic(&SyntheticSpec::balanced_tree(3, 3, 1)).unwrap();
    let table = train_poincare_embedding(
        &ds,
        &EmbedConfig {
            epochs: 20,
            ..EmbedConfig::default()
        },
    )
    .unwrap()
    .table;
    let cfg = TrainConfig {
        epochs: 15,
        ..TrainConfig::default()
    };
    let a = train_poindp(&ds, Some(&table), &cfg).unwrap();
    let b = train_poindp(&ds, Some(&table), &cfg).unwrap();
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.params, b.params);
    for m in &a.metrics {
        assert_eq!(m.epsilon_r + m.epsilon_alpha, 1.0);
        assert!(m.beta > 0.0 && m.beta < 1.0);
    }
    assert!(train_poindp(&ds, None, &cfg).is_err());
}

#[test]
fn none_mode_equals_unperturbed_gcn() {
    // Independent clean loop: forward without noise, Adam on W1 (with L2) and W2.
    let ds = gen_synthetic(&SyntheticSpec::two_block(20, 3)).unwrap();
    let cfg = TrainConfig {
        noise_mode: NoiseMode::None,
        epochs: 6,
        ..TrainConfig::default()
    };
    let out = train_poindp(&ds, None, &cfg).unwrap();

    let pg = PreparedGraph::new(&ds);
    let mut p = ModelParams::init(ds.num_features(), 16, 2, 0.5, 0).unwrap();
    let (b1, b2, eps, lr): (f64, f64, f64, f64) = (0.9, 0.999, 1e-8, cfg.lr);
    let mut state: Vec<(f64, f64)> = vec![(0.0, 0.0); p.w1.len() + p.w2.len()];
    for t in 1..=cfg.epochs as i32 {
        let (_, cache) = gcn_forward(&pg, &p, &NoiseDraw::None).unwrap();
        let g = backward(&pg, &p, &cache, ds.labels(), &ds.masks().train).unwrap();
        let g1 = &g.w1 + &(&p.w1 * cfg.weight_decay);
        let mut w1 = p.w1.clone();
        let mut w2 = p.w2.clone();
        let params = w1.iter_mut().chain(w2.iter_mut());
        let grads = g1.iter().chain(g.w2.iter());
        for ((w, &gv), (m, v)) in params.zip(grads).zip(state.iter_mut()) {
            *m = b1 * *m + (1.0 - b1) * gv;
            *v = b2 * *v + (1.0 - b2) * gv * gv;
            let mh = *m / (1.0 - b1.powi(t));
            let vh = *v / (1.0 - b2.powi(t));
            *w -= lr * mh / (vh.sqrt() + eps);
        }
        p = ModelParams::new(w1, w2, p.beta_logit).unwrap();
    }
    assert_eq!(out.params.w1, p.w1);
    assert_eq!(out.params.w2, p.w2);
    assert_eq!(out.params.beta_logit, p.beta_logit);
}
