//! Drives the experiment layer from a TOML config, as the `poindp` binary
//! does, and lists the files and manifest it produced.

use poindp::experiment::{cmd_train, RunConfig};

const CONFIG: &str = r#"
name = "config_example"
seeds = [0, 1, 2]

[dataset.synthetic]
kind = { type = "hierarchical_blocks", branching = 3, depth = 2, block_size = 12, p_intra = 0.3, p_inter = 0.02 }
feature_noise = 1.0

[train]
noise_mode = "no_allocate"
epochs = 100
budget = { epsilon = 0.5, delta = 1e-5, beta = 0.5 }
"#;

fn main() -> poindp::Result<()> {
    let mut cfg = RunConfig::from_toml(CONFIG)?;
    cfg.out_dir = std::env::temp_dir().join("poindp-examples");
    println!("config hash {}", cfg.hash());
    let (manifest, rows) = cmd_train(&cfg)?;
    for r in rows {
        println!("seed {}: weighted F1 {:.3}, β {:.3}", r.seed, r.weighted_f1, r.beta);
    }
    for f in &manifest.outputs {
        println!("  {:<22} {} bytes  sha256 {}", f.path, f.bytes, &f.sha256[..12]);
    }
    print!(
        "{}",
        std::fs::read_to_string(cfg.run_dir().join("summary.csv")).map_err(|e| poindp::Error::Io {
            path: cfg.run_dir(),
            source: e,
        })?
    );
    Ok(())
}
