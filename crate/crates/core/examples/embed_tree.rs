//! Learns a 2-D Poincaré embedding of a balanced tree and checks that depth
//! in the tree maps to distance from the origin.

use poindp::data::{dataset_stats, gen_synthetic, SyntheticSpec};
use poindp::embed::{train_poincare_embedding, EmbedConfig};
use poindp::stats::spearman;

fn main() -> poindp::Result<()> {
    let tree = gen_synthetic(&SyntheticSpec::balanced_tree(3, 4, 0))?;
    let stats = dataset_stats(&tree);
    println!(
        "tree(3,4): {} nodes, {} edges, avg degree {:.3}",
        stats.nodes, stats.edges, stats.avg_degree
    );

    let out = train_poincare_embedding(&tree, &EmbedConfig::default())?;
    for (i, loss) in out.epoch_losses.iter().enumerate().step_by(20) {
        println!("epoch {:>3}: loss {loss:.4}", i + 1);
    }

    let depth: Vec<f64> = tree.bfs(0).into_iter().map(|d| d as f64).collect();
    let radius = out.table.radii();
    println!("Spearman(depth, Poincaré norm) = {:.3}", spearman(&depth, &radius));
    for level in 0..=4 {
        let r: Vec<f64> = (0..tree.num_nodes())
            .filter(|&u| depth[u] == level as f64)
            .map(|u| radius[u])
            .collect();
        println!(
            "  depth {level}: mean norm {:.3} over {} nodes",
            r.iter().sum::<f64>() / r.len() as f64,
            r.len()
        );
    }
    Ok(())
}
