//! Membership-inference attacks and graph hyperbolicity.

mod gromov;
mod mia;
mod mlp;

pub use gromov::{all_pairs_hops, four_point_delta, gromov_delta, DeltaMode};
pub use mia::{
    attack_records, auc, build_shadow_splits, mia_experiment, precision_at, run_mia, AttackMetrics, AttackRecord,
    AttackRow, MiaArm, MiaProtocol, ShadowSplit,
};
pub use mlp::{AttackMlp, MlpConfig};
