use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use poindp::attack::MiaArm;
use poindp::data::SyntheticSpec;
use poindp::experiment::{self, Overrides, RunConfig};
use poindp::gnn::NoiseMode;
use poindp::Result;

#[derive(Parser)]
#[command(
    name = "poindp",
    version,
    about = "Hierarchy-aware differentially private GNN experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run config; a hierarchical-blocks synthetic graph is used when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Privacy budget for training, sweep, attack defense and audit.
    #[arg(long, global = true, value_name = "F")]
    epsilon: Option<f64>,
    /// none, poindp, no_inter, no_intra, no_allocate, euclidean_gauss, euclidean_laplace.
    #[arg(long, global = true, value_name = "NAME")]
    noise_mode: Option<NoiseMode>,
    /// Output root; results go to <DIR>/<run name>/.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated attack arms: gcn, gcn+H, poindp.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    arms: Option<Vec<MiaArm>>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Train Poincaré embeddings.
    Embed,
    /// Train the configured noise arm across seeds.
    Train,
    /// Sweep the privacy budget over the configured grid.
    Sweep,
    /// Membership-inference attack arms.
    Attack,
    /// Empirical privacy audit of the one-dimensional mechanism.
    Audit,
    /// Poincaré-disk noise maps and cumulative noise distribution.
    Plot,
}

fn run(cli: Cli) -> Result<()> {
    experiment::thread_pool()?;
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::synthetic(SyntheticSpec::hierarchical_blocks(0)),
    };
    cfg.apply(&Overrides {
        seed: cli.seed,
        epsilon: cli.epsilon,
        noise_mode: cli.noise_mode,
        out_dir: cli.out,
        arms: cli.arms,
    })?;
    let dir = cfg.run_dir();
    match cli.command {
        Command::Embed => {
            experiment::cmd_embed(&cfg)?;
        }
        Command::Train => {
            let (_, rows) = experiment::cmd_train(&cfg)?;
            for r in rows {
                println!(
                    "seed {}: weighted F1 {:.4}, micro F1 {:.4}, β {:.3}",
                    r.seed, r.weighted_f1, r.micro_f1, r.beta
                );
            }
        }
        Command::Sweep => {
            let (_, rows) = experiment::cmd_sweep(&cfg)?;
            println!("{} sweep runs", rows.len());
        }
        Command::Attack => {
            let (_, rows) = experiment::cmd_attack(&cfg)?;
            for r in rows {
                println!(
                    "seed {} {} hierarchy={}: AUC {:.4}, precision {:.4}",
                    r.seed, r.defense_mode, r.with_hierarchy, r.auc, r.precision
                );
            }
        }
        Command::Audit => {
            let (_, report) = experiment::cmd_audit(&cfg)?;
            print!("{report}");
        }
        Command::Plot => {
            experiment::cmd_plot(&cfg)?;
        }
    }
    println!("outputs in {}", dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
