//! Runs the ε sweep through the experiment layer and prints the per-budget
//! means from `sweep_summary.csv`.

use poindp::data::SyntheticSpec;
use poindp::experiment::{cmd_sweep, RunConfig};
use poindp::stats::mean_std;

fn main() -> poindp::Result<()> {
    let mut cfg = RunConfig::synthetic(SyntheticSpec::hierarchical_blocks(0));
    cfg.name = "budget_sweep".into();
    cfg.seeds = (0..3).collect();
    cfg.out_dir = std::env::temp_dir().join("poindp-examples");
    let (manifest, rows) = cmd_sweep(&cfg)?;

    for eps in &cfg.sweep.epsilons {
        let group: Vec<_> = rows.iter().filter(|r| r.epsilon == *eps).collect();
        let f1: Vec<f64> = group.iter().map(|r| r.summary.weighted_f1).collect();
        let noise: Vec<f64> = group.iter().map(|r| r.summary.mean_noise_norm).collect();
        println!(
            "ε = {eps:<5} weighted F1 {:.3}, mean |η| {:.1}",
            mean_std(&f1).0,
            mean_std(&noise).0
        );
    }
    println!("wrote {} files to {}", manifest.outputs.len(), cfg.run_dir().display());
    Ok(())
}
