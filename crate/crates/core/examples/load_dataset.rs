//! Loads a dataset from edge, feature and label files and prints its
//! statistics. Pass a directory holding `edges.txt`, `features.csv` and
//! `labels.csv`; without one a small example is written to a temp dir.

use std::fs;
use std::path::PathBuf;

use poindp::data::{dataset_stats, load_dataset, SplitSpec};

fn write_example() -> std::io::Result<PathBuf> {
    let dir = std::env::temp_dir().join("poindp-example-data");
    fs::create_dir_all(&dir)?;
    fs::write(
        dir.join("edges.txt"),
        "# u v\n10 11\n11 12\n12 10\n12 13\n13 14\n14 13\n",
    )?;
    let features: String = (10..15).map(|u| format!("{u},{}.0,{}.5\n", u % 3, u % 2)).collect();
    fs::write(dir.join("features.csv"), features)?;
    fs::write(dir.join("labels.csv"), "10,a\n11,a\n12,b\n13,b\n14,c\n")?;
    Ok(dir)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = match std::env::args().nth(1) {
        Some(d) => PathBuf::from(d),
        None => write_example()?,
    };
    let split = SplitSpec::Fractions {
        train: 0.4,
        val: 0.2,
        seed: 0,
    };
    let ds = load_dataset(
        &dir.join("edges.txt"),
        &dir.join("features.csv"),
        &dir.join("labels.csv"),
        &split,
    )?;
    let s = dataset_stats(&ds);
    println!(
        "{}: {} nodes, {} undirected edges ({} raw lines), {} labels, avg degree {:.3}",
        dir.display(),
        s.nodes,
        s.edges,
        s.raw_edges,
        s.labels,
        s.avg_degree
    );
    let m = ds.masks();
    println!(
        "train {}, val {}, test {}",
        m.train_nodes().len(),
        m.val_nodes().len(),
        m.test_nodes().len()
    );
    Ok(())
}
