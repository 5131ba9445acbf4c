//! Gromov δ of trees, complete graphs, cycles and the synthetic graphs.

use poindp::attack::{gromov_delta, DeltaMode};
use poindp::data::{gen_synthetic, GraphDataset, Masks, SyntheticSpec};

fn from_edges(n: usize, edges: &[(usize, usize)]) -> poindp::Result<GraphDataset> {
    GraphDataset::new(
        "toy",
        n,
        edges,
        ndarray::Array2::zeros((n, 1)),
        vec![0; n],
        Masks::empty(n),
    )
}

fn main() -> poindp::Result<()> {
    let complete: Vec<_> = (0..7).flat_map(|u| (u + 1..7).map(move |v| (u, v))).collect();
    let cycle: Vec<_> = (0..6).map(|u| (u, (u + 1) % 6)).collect();
    let graphs = [
        ("tree(3,4)", gen_synthetic(&SyntheticSpec::balanced_tree(3, 4, 0))?),
        ("K7", from_edges(7, &complete)?),
        ("C6", from_edges(6, &cycle)?),
        (
            "hierarchical_blocks",
            gen_synthetic(&SyntheticSpec::hierarchical_blocks(0))?,
        ),
        ("two_block", gen_synthetic(&SyntheticSpec::two_block(40, 0))?),
    ];
    for (name, g) in graphs {
        let (g, _) = g.largest_component()?;
        let exact = gromov_delta(&g, DeltaMode::Exact, 0, 0)?;
        let sampled = gromov_delta(&g, DeltaMode::Sampled, 20_000, 0)?;
        println!(
            "{name:<20} n = {:>3}  δ exact {exact:.2}  sampled {sampled:.2}",
            g.num_nodes()
        );
    }
    Ok(())
}
