//! Config-driven experiment commands. Each command writes its outputs under
//! `<out_dir>/<name>/` and finishes with an atomically written
//! `manifest_<command>.toml`.

mod commands;
mod config;
mod manifest;
pub mod plot;

pub use commands::{
    cmd_attack, cmd_audit, cmd_embed, cmd_plot, cmd_sweep, cmd_train, summary_csv, thread_pool, NoiseProfile,
    SeedSummary, SweepRow, THREADS_ENV,
};
pub use config::{AttackSection, DatasetSource, Overrides, PlotConfig, RunConfig, SweepConfig};
pub use manifest::{sha256_hex, version_string, write_atomic, OutputFile, RunManifest, StageTiming};
