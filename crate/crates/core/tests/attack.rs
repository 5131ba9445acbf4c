use poindp::attack::{mia_experiment, MiaArm, MiaProtocol};
use poindp::data::{gen_synthetic, GraphDataset, SyntheticKind, SyntheticSpec};
use poindp::embed::{train_poincare_embedding, EmbedConfig};
use poindp::stats::mean;
use poindp::Error;

fn two_block(seed: u64) -> GraphDataset {
    let mut spec = SyntheticSpec::new(
        SyntheticKind::TwoBlock {
            block_size: 80,
            p_in: 0.05,
            p_out: 0.01,
        },
        seed,
    );
    spec.feature_noise = 4.0;
    gen_synthetic(&spec).unwrap()
}

#[test]
fn overfit_target_leaks_membership() {
    // noisy features on a sparse two-community graph: a long-trained GCN
    // memorises its members and the shadow attack picks that up
    let aucs: Vec<f64> = (0..10)
        .map(|seed| {
            let res = mia_experiment(&two_block(seed), None, &MiaProtocol::default(), &[MiaArm::Gcn], seed).unwrap();
            res[0].1.auc
        })
        .collect();
    assert!(mean(&aucs) > 0.6, "mean AUC {:.3} from {aucs:?}", mean(&aucs));
}

#[test]
fn hierarchy_arm_requires_an_embedding() {
    let ds = two_block(0);
    for arm in [MiaArm::GcnH, MiaArm::Poindp] {
        let err = mia_experiment(&ds, None, &MiaProtocol::default(), &[arm], 0).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)), "{arm}: {err}");
    }
}

#[test]
fn every_requested_arm_reports_once() {
    let ds = two_block(1);
    let table = train_poincare_embedding(&ds, &EmbedConfig::default()).unwrap().table;
    let protocol = MiaProtocol {
        epochs: 40,
        ..MiaProtocol::default()
    };
    let res = mia_experiment(&ds, Some(&table), &protocol, &MiaArm::ALL, 1).unwrap();
    let arms: Vec<MiaArm> = res.iter().map(|r| r.0).collect();
    assert_eq!(arms, MiaArm::ALL);
    for (arm, m) in res {
        assert!(
            (0.0..=1.0).contains(&m.auc) && (0.0..=1.0).contains(&m.precision),
            "{arm}: {m:?}"
        );
    }
}

#[test]
fn oversized_pool_is_rejected() {
    let protocol = MiaProtocol {
        pool_fraction: 0.4,
        ..MiaProtocol::default()
    };
    assert!(mia_experiment(&two_block(0), None, &protocol, &[MiaArm::Gcn], 0).is_err());
}
