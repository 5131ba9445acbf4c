use std::fmt::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::RunConfig;
use super::manifest::{RunManifest, RunRecorder};
use super::plot::{cdf_svg, cumulative_distribution, disk_svg, noise_magnitudes};
use crate::attack::{mia_experiment, AttackRow, MiaArm};
use crate::data::{make_hierarchy_splits, GraphDataset, SplitMode};
use crate::dp::{hierarchy_sensitivities, privacy_audit_1d, AuditReport, SensitivityPair};
use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::gnn::{
    draw_noise, gcn_forward, metrics_csv, train_poindp, NoiseMode, PreparedGraph, TrainConfig, TrainOutcome,
};
use crate::stats::mean_std;

/// Environment variable capping the number of seeds run in parallel.
pub const THREADS_ENV: &str = "POINDP_THREADS";

/// A rayon pool sized by `POINDP_THREADS` (rayon's default when unset).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return Err(Error::Config(format!("{THREADS_ENV}={v:?} is not a positive integer"))),
        },
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

/// Runs `job` for every item on the capped pool, keeping input order.
fn par_jobs<I: Sync, T: Send>(items: &[I], job: impl Fn(&I) -> Result<T> + Sync) -> Result<Vec<T>> {
    thread_pool()?.install(|| items.par_iter().map(&job).collect())
}

fn needs_table(mode: NoiseMode) -> bool {
    mode.needs_embedding()
}

fn load_with_table(cfg: &RunConfig, seed: u64, want_table: bool) -> Result<(GraphDataset, Option<EmbeddingTable>)> {
    let ds = cfg.dataset.load(seed)?;
    let table = if want_table {
        Some(cfg.embedding_for(&ds, seed)?)
    } else {
        None
    };
    Ok((ds, table))
}

fn seeded_train_config(cfg: &RunConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        seed: cfg.train.seed.wrapping_add(seed),
        ..cfg.train.clone()
    }
}

fn epoch_mean_noise(out: &TrainOutcome) -> f64 {
    let norms: Vec<f64> = out.metrics.iter().map(|m| m.mean_noise_norm).collect();
    mean_std(&norms).0
}

/// Trains one embedding per seed and writes `embedding_seed<N>.txt`.
pub fn cmd_embed(cfg: &RunConfig) -> Result<RunManifest> {
    let mut rec = RunRecorder::new(cfg.run_dir());
    let tables = rec.time("embed", || {
        par_jobs(&cfg.seeds, |&seed| {
            let ds = cfg.dataset.load(seed)?;
            cfg.embedding_for(&ds, seed)
        })
    })?;
    for (seed, table) in cfg.seeds.iter().zip(&tables) {
        rec.write(&format!("embedding_seed{seed}.txt"), table.to_text())?;
    }
    rec.finish("embed", &cfg.name, cfg.hash(), cfg.seeds.clone())
}

/// Final scores of one training run.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedSummary {
    pub seed: u64,
    pub weighted_f1: f64,
    pub micro_f1: f64,
    pub val_weighted_f1: f64,
    /// Injected noise norm averaged over nodes and epochs.
    pub mean_noise_norm: f64,
    pub beta: f64,
}

impl SeedSummary {
    fn from_outcome(seed: u64, out: &TrainOutcome) -> Self {
        Self {
            seed,
            weighted_f1: out.test.weighted_f1,
            micro_f1: out.test.micro_f1,
            val_weighted_f1: out.val.weighted_f1,
            mean_noise_norm: epoch_mean_noise(out),
            beta: out.params.beta(),
        }
    }
}

pub fn summary_csv(mode: NoiseMode, epsilon: f64, rows: &[SeedSummary]) -> String {
    let mut out = String::from("seed,noise_mode,epsilon,weighted_f1,micro_f1,val_weighted_f1,mean_noise_norm,beta\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{mode},{epsilon},{},{},{},{},{}",
            r.seed, r.weighted_f1, r.micro_f1, r.val_weighted_f1, r.mean_noise_norm, r.beta
        );
    }
    let cell = |f: fn(&SeedSummary) -> f64| {
        let (m, s) = mean_std(&rows.iter().map(f).collect::<Vec<_>>());
        format!("{m:.6}±{s:.6}")
    };
    let _ = writeln!(
        out,
        "mean±std,{mode},{epsilon},{},{},{},{},{}",
        cell(|r| r.weighted_f1),
        cell(|r| r.micro_f1),
        cell(|r| r.val_weighted_f1),
        cell(|r| r.mean_noise_norm),
        cell(|r| r.beta)
    );
    out
}

/// Trains the configured arm once per seed. Writes per-seed metrics and
/// checkpoints plus `summary.csv`.
pub fn cmd_train(cfg: &RunConfig) -> Result<(RunManifest, Vec<SeedSummary>)> {
    let mut rec = RunRecorder::new(cfg.run_dir());
    let mode = cfg.train.noise_mode;
    let outcomes = rec.time("train", || {
        par_jobs(&cfg.seeds, |&seed| {
            let (ds, table) = load_with_table(cfg, seed, needs_table(mode))?;
            train_poindp(&ds, table.as_ref(), &seeded_train_config(cfg, seed))
        })
    })?;
    let mut rows = Vec::with_capacity(outcomes.len());
    for (&seed, out) in cfg.seeds.iter().zip(&outcomes) {
        rec.write(&format!("metrics_seed{seed}.csv"), metrics_csv(&out.metrics))?;
        rec.write(&format!("checkpoint_seed{seed}.txt"), out.params.to_text())?;
        rows.push(SeedSummary::from_outcome(seed, out));
    }
    rec.write("summary.csv", summary_csv(mode, cfg.train.budget.epsilon(), &rows))?;
    let manifest = rec.finish("train", &cfg.name, cfg.hash(), cfg.seeds.clone())?;
    Ok((manifest, rows))
}

/// One cell of the sweep grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub split_mode: SplitMode,
    pub epsilon: f64,
    pub summary: SeedSummary,
}

/// Trains the configured arm over split modes × ε × seeds and writes the
/// long-form `sweep.csv` and per-group means in `sweep_summary.csv`.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<(RunManifest, Vec<SweepRow>)> {
    let sweep = &cfg.sweep;
    if sweep.epsilons.is_empty() || sweep.split_modes.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let mode = cfg.train.noise_mode;
    let mut jobs = Vec::new();
    for &split in &sweep.split_modes {
        for &eps in &sweep.epsilons {
            for &seed in &cfg.seeds {
                jobs.push((split, eps, seed));
            }
        }
    }
    let mut rec = RunRecorder::new(cfg.run_dir());
    let rows = rec.time("sweep", || {
        par_jobs(&jobs, |&(split, eps, seed)| {
            let want_table = needs_table(mode) || split != SplitMode::Random;
            let (ds, table) = load_with_table(cfg, seed, want_table)?;
            let masks = make_hierarchy_splits(&ds, table.as_ref(), split, sweep.split_frac, seed)?;
            let ds = ds.with_masks(masks)?;
            let mut tc = seeded_train_config(cfg, seed);
            tc.budget = tc.budget.with_epsilon(eps)?;
            let out = train_poindp(&ds, table.as_ref(), &tc)?;
            Ok(SweepRow {
                split_mode: split,
                epsilon: eps,
                summary: SeedSummary::from_outcome(seed, &out),
            })
        })
    })?;

    let dataset = cfg.dataset.name();
    let mut long =
        String::from("dataset,noise_mode,split_mode,epsilon,seed,weighted_f1,micro_f1,mean_noise_norm,beta\n");
    for r in &rows {
        let s = &r.summary;
        let _ = writeln!(
            long,
            "{dataset},{mode},{},{},{},{},{},{},{}",
            r.split_mode.name(),
            r.epsilon,
            s.seed,
            s.weighted_f1,
            s.micro_f1,
            s.mean_noise_norm,
            s.beta
        );
    }
    let mut summary = String::from(
        "dataset,noise_mode,split_mode,epsilon,seeds,weighted_f1_mean,weighted_f1_std,mean_noise_norm_mean,mean_noise_norm_std\n",
    );
    for group in rows.chunks(cfg.seeds.len()) {
        let f1: Vec<f64> = group.iter().map(|r| r.summary.weighted_f1).collect();
        let noise: Vec<f64> = group.iter().map(|r| r.summary.mean_noise_norm).collect();
        let ((fm, fs), (nm, ns)) = (mean_std(&f1), mean_std(&noise));
        let _ = writeln!(
            summary,
            "{dataset},{mode},{},{},{},{fm},{fs},{nm},{ns}",
            group[0].split_mode.name(),
            group[0].epsilon,
            group.len()
        );
    }
    rec.write("sweep.csv", long)?;
    rec.write("sweep_summary.csv", summary)?;
    let manifest = rec.finish("sweep", &cfg.name, cfg.hash(), cfg.seeds.clone())?;
    Ok((manifest, rows))
}

/// Runs the attack arms once per seed and writes `attack.csv`. Undefended
/// rows report `epsilon = inf`.
pub fn cmd_attack(cfg: &RunConfig) -> Result<(RunManifest, Vec<AttackRow>)> {
    let arms = &cfg.attack.arms;
    if arms.is_empty() {
        return Err(Error::Config("no attack arms requested".into()));
    }
    let protocol = &cfg.attack.protocol;
    let want_table = arms.iter().any(|a| matches!(a, MiaArm::GcnH | MiaArm::Poindp));
    let dataset = cfg.dataset.name();
    let mut rec = RunRecorder::new(cfg.run_dir());
    let per_seed = rec.time("attack", || {
        par_jobs(&cfg.seeds, |&seed| {
            let (ds, table) = load_with_table(cfg, seed, want_table)?;
            let results = mia_experiment(&ds, table.as_ref(), protocol, arms, seed)?;
            Ok(results
                .into_iter()
                .map(|(arm, m)| AttackRow {
                    dataset: dataset.clone(),
                    defense_mode: match arm {
                        MiaArm::Poindp => NoiseMode::Poindp.name().to_string(),
                        _ => NoiseMode::None.name().to_string(),
                    },
                    with_hierarchy: arm.with_hierarchy(),
                    epsilon: match arm {
                        MiaArm::Poindp => protocol.defense_epsilon,
                        _ => f64::INFINITY,
                    },
                    auc: m.auc,
                    precision: m.precision,
                    seed,
                })
                .collect::<Vec<_>>())
        })
    })?;
    let rows: Vec<AttackRow> = per_seed.into_iter().flatten().collect();
    let mut csv = format!("{}\n", AttackRow::HEADER);
    for r in &rows {
        csv.push_str(&r.to_csv());
        csv.push('\n');
    }
    rec.write("attack.csv", csv)?;
    let manifest = rec.finish("attack", &cfg.name, cfg.hash(), cfg.seeds.clone())?;
    Ok((manifest, rows))
}

/// Runs the privacy audit and writes `audit.txt`. The first run seed is
/// added to the audit seed.
pub fn cmd_audit(cfg: &RunConfig) -> Result<(RunManifest, AuditReport)> {
    let mut rec = RunRecorder::new(cfg.run_dir());
    let audit = crate::dp::AuditConfig {
        seed: cfg.audit.seed.wrapping_add(cfg.seeds[0]),
        ..cfg.audit.clone()
    };
    let report = rec.time("audit", || privacy_audit_1d(&audit))?;
    rec.write("audit.txt", report.to_string())?;
    let manifest = rec.finish("audit", &cfg.name, cfg.hash(), vec![cfg.seeds[0]])?;
    Ok((manifest, report))
}

/// Per-node noise magnitudes of one trained arm.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseProfile {
    pub mode: NoiseMode,
    pub magnitudes: Vec<f64>,
}

/// Draws one noise matrix for the trained `params` exactly as a training
/// step would, from a generator stream separate from training.
fn sample_noise_profile(
    ds: &GraphDataset,
    table: Option<&EmbeddingTable>,
    tc: &TrainConfig,
    out: &TrainOutcome,
) -> Result<NoiseProfile> {
    let mode = tc.noise_mode;
    let sens = match table {
        Some(t) if mode.needs_embedding() => hierarchy_sensitivities(t, &ds.masks().train_nodes(), tc.clip_tau)?,
        _ => SensitivityPair::zero(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(tc.seed);
    rng.set_stream(2);
    let draw = draw_noise(mode, sens, tc, ds.num_nodes(), tc.hidden_dim, &mut rng);
    let (_, cache) = gcn_forward(&PreparedGraph::new(ds), &out.params, &draw)?;
    Ok(NoiseProfile {
        mode,
        magnitudes: noise_magnitudes(&cache.noise),
    })
}

/// Trains every plot arm on the first seed and renders the Poincaré-disk
/// noise maps and the cumulative distribution of per-node noise magnitude
/// under `plots/`.
pub fn cmd_plot(cfg: &RunConfig) -> Result<(RunManifest, Vec<NoiseProfile>)> {
    if cfg.plot.arms.is_empty() {
        return Err(Error::Config("no plot arms requested".into()));
    }
    let seed = cfg.seeds[0];
    let mut rec = RunRecorder::new(cfg.run_dir());
    let (ds, table) = load_with_table(cfg, seed, true)?;
    let table = table.expect("table requested");
    if table.dim() < 2 {
        return Err(Error::Config("disk plots need an embedding of dimension ≥ 2".into()));
    }
    let profiles = rec.time("train", || {
        par_jobs(&cfg.plot.arms, |&mode| {
            let tc = TrainConfig {
                noise_mode: mode,
                ..seeded_train_config(cfg, seed)
            };
            let out = train_poindp(&ds, Some(&table), &tc)?;
            sample_noise_profile(&ds, Some(&table), &tc, &out)
        })
    })?;

    let points: Vec<[f64; 2]> = table.points().iter().map(|p| [p.coords()[0], p.coords()[1]]).collect();
    let mut nodes = String::from("node,x,y");
    for p in &profiles {
        let _ = write!(nodes, ",{}", p.mode);
    }
    nodes.push('\n');
    for (u, pt) in points.iter().enumerate() {
        let _ = write!(nodes, "{u},{},{}", pt[0], pt[1]);
        for p in &profiles {
            let _ = write!(nodes, ",{}", p.magnitudes[u]);
        }
        nodes.push('\n');
    }
    rec.write("plots/noise_nodes.csv", nodes)?;

    let mut cdf_csv = String::from("noise_mode,magnitude,cumulative\n");
    let mut curves = Vec::new();
    for p in &profiles {
        let title = format!("{} noise magnitude", p.mode.label());
        rec.write(
            &format!("plots/noise_disk_{}.svg", p.mode),
            disk_svg(&points, &p.magnitudes, &title),
        )?;
        let cdf = cumulative_distribution(&p.magnitudes);
        for (m, c) in &cdf {
            let _ = writeln!(cdf_csv, "{},{m},{c}", p.mode);
        }
        curves.push((p.mode.label().to_string(), cdf));
    }
    rec.write("plots/noise_cdf.csv", cdf_csv)?;
    rec.write(
        "plots/noise_cdf.svg",
        cdf_svg(&curves, "Cumulative distribution of per-node noise"),
    )?;
    let manifest = rec.finish("plot", &cfg.name, cfg.hash(), vec![seed])?;
    Ok((manifest, profiles))
}
