//! Shadow-model membership inference against an undefended GCN, the same
//! attack with the hierarchy feature, and a PoinDP-defended target.

use poindp::attack::{mia_experiment, MiaArm, MiaProtocol};
use poindp::data::{gen_synthetic, SyntheticSpec};
use poindp::embed::{train_poincare_embedding, EmbedConfig};

fn main() -> poindp::Result<()> {
    let protocol = MiaProtocol::default();
    for seed in 0..3 {
        let mut spec = SyntheticSpec::hierarchical_blocks(seed);
        spec.feature_noise = 5.0;
        let ds = gen_synthetic(&spec)?;
        let table = train_poincare_embedding(
            &ds,
            &EmbedConfig {
                seed,
                ..EmbedConfig::default()
            },
        )?
        .table;
        for (arm, m) in mia_experiment(&ds, Some(&table), &protocol, &MiaArm::ALL, seed)? {
            println!("seed {seed} {arm:<7} AUC {:.3} precision {:.3}", m.auc, m.precision);
        }
    }
    Ok(())
}
