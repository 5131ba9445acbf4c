//! Ablation arms at two privacy budgets, averaged over a few seeds.

use poindp::data::{gen_synthetic, SyntheticSpec};
use poindp::embed::{train_poincare_embedding, EmbedConfig};
use poindp::gnn::{train_poindp, NoiseMode, TrainConfig};
use poindp::stats::mean_std;

fn main() -> poindp::Result<()> {
    let seeds = 0..5u64;
    let mut data = Vec::new();
    for seed in seeds.clone() {
        let ds = gen_synthetic(&SyntheticSpec::hierarchical_blocks(seed))?;
        let table = train_poincare_embedding(
            &ds,
            &EmbedConfig {
                seed,
                ..EmbedConfig::default()
            },
        )?
        .table;
        data.push((seed, ds, table));
    }
    for eps in [0.1, 1.0] {
        println!("ε = {eps}");
        for mode in NoiseMode::ABLATIONS {
            let mut f1 = Vec::new();
            for (seed, ds, table) in &data {
                let mut config = TrainConfig {
                    seed: *seed,
                    noise_mode: mode,
                    ..TrainConfig::default()
                };
                config.budget = config.budget.with_epsilon(eps)?;
                f1.push(train_poindp(ds, Some(table), &config)?.test.weighted_f1);
            }
            let (m, s) = mean_std(&f1);
            println!("  {:<22} weighted F1 {m:.3} ± {s:.3}", mode.label());
        }
    }
    Ok(())
}
