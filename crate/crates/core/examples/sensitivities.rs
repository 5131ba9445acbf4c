//! Inter- and intra-hierarchy sensitivities of embedded node sets and the
//! noise scales they calibrate.

use poindp::data::{gen_synthetic, SyntheticSpec};
use poindp::dp::{calibrate_noise_scale, hierarchy_sensitivities, PrivacyBudget, DEFAULT_CLIP_TAU};
use poindp::embed::{train_poincare_embedding, EmbedConfig};

fn main() -> poindp::Result<()> {
    let ds = gen_synthetic(&SyntheticSpec::hierarchical_blocks(0))?;
    let table = train_poincare_embedding(&ds, &EmbedConfig::default())?.table;
    let train = ds.masks().train_nodes();

    let sens = hierarchy_sensitivities(&table, &train, DEFAULT_CLIP_TAU)?;
    println!(
        "{} training nodes: Δ_r = {:.4}, Δ_α = {:.4}",
        train.len(),
        sens.delta_r,
        sens.delta_alpha
    );

    // a set of nodes from one block sits at one level and shares a direction
    let block: Vec<usize> = (20..26).collect();
    let local = hierarchy_sensitivities(&table, &block, DEFAULT_CLIP_TAU)?;
    println!("one block: Δ_r = {:.4}, Δ_α = {:.4}", local.delta_r, local.delta_alpha);

    for eps in [0.1, 0.5, 1.0] {
        let budget = PrivacyBudget::new(eps, 1e-5, 0.5)?;
        let scale = calibrate_noise_scale(sens, &budget)?;
        println!("ε = {eps}: σ_r = {:.3}, σ_α = {:.3}", scale.sigma_r, scale.sigma_alpha);
    }
    Ok(())
}
