use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GraphDataset, Masks};
use crate::error::{Error, Result};

/// How to carve train/val/test masks out of a loaded dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitSpec {
    /// `train_per_class` labelled nodes per class, then `val` and `test` nodes
    /// from the remainder.
    PerClass {
        train_per_class: usize,
        val: usize,
        test: usize,
        seed: u64,
    },
    /// Fractions of all nodes; test takes whatever is left.
    Fractions { train: f64, val: f64, seed: u64 },
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::PerClass {
            train_per_class: 20,
            val: 500,
            test: 1000,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn apply(&self, labels: &[usize], num_classes: usize) -> Result<Masks> {
        let n = labels.len();
        let mut masks = Masks::empty(n);
        match *self {
            SplitSpec::PerClass {
                train_per_class,
                val,
                test,
                seed,
            } => {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                let mut taken = vec![0usize; num_classes];
                let mut rest = Vec::with_capacity(n);
                for u in order {
                    if taken[labels[u]] < train_per_class {
                        taken[labels[u]] += 1;
                        masks.train[u] = true;
                    } else {
                        rest.push(u);
                    }
                }
                for (i, u) in rest.into_iter().enumerate() {
                    if i < val {
                        masks.val[u] = true;
                    } else if i < val + test {
                        masks.test[u] = true;
                    }
                }
            }
            SplitSpec::Fractions { train, val, seed } => {
                if !(train > 0.0 && val >= 0.0 && train + val < 1.0) {
                    return Err(Error::param(format!(
                        "split fractions train={train} val={val} must leave room for a test set"
                    )));
                }
                masks = super::random_masks(n, train, val, seed);
            }
        }
        Ok(masks)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Loads a dataset from three text files:
///
/// * edges: two whitespace-separated integer node ids per line;
/// * features: CSV rows `node_id,f_1,...,f_d`;
/// * labels: CSV rows `node_id,class` (class may be any token).
///
/// Lines starting with `#` are skipped. Node ids are remapped to `0..n` in
/// ascending order of the ids found in the feature file.
pub fn load_dataset(
    edge_file: &Path,
    feature_file: &Path,
    label_file: &Path,
    split: &SplitSpec,
) -> Result<GraphDataset> {
    let feat_text = read(feature_file)?;
    let mut rows: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    let mut dim = None;
    for (ln, line) in content_lines(&feat_text) {
        let mut cells = line.split(',').map(str::trim);
        let id: i64 = cells
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| parse_err(feature_file, ln, "expected integer node id"))?;
        let vals = cells
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| parse_err(feature_file, ln, e.to_string()))?;
        match dim {
            None => dim = Some(vals.len()),
            Some(d) if d != vals.len() => {
                return Err(parse_err(
                    feature_file,
                    ln,
                    format!("expected {d} feature values, got {}", vals.len()),
                ))
            }
            _ => {}
        }
        if rows.insert(id, vals).is_some() {
            return Err(parse_err(feature_file, ln, format!("duplicate node id {id}")));
        }
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{} has no feature rows", feature_file.display())));
    }
    let n = rows.len();
    let dim = dim.unwrap_or(0);
    let index: HashMap<i64, usize> = rows.keys().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut features = Array2::zeros((n, dim));
    for (i, vals) in rows.values().enumerate() {
        for (j, v) in vals.iter().enumerate() {
            features[[i, j]] = *v;
        }
    }

    let label_text = read(label_file)?;
    let mut raw_labels: Vec<Option<String>> = vec![None; n];
    let mut label_rows = 0;
    for (ln, line) in content_lines(&label_text) {
        let mut cells = line.split(',').map(str::trim);
        let id: i64 = cells
            .next()
            .and_then(|c| c.parse().ok())
            .ok_or_else(|| parse_err(label_file, ln, "expected integer node id"))?;
        let class = cells
            .next()
            .filter(|c| !c.is_empty())
            .ok_or_else(|| parse_err(label_file, ln, "missing class"))?;
        let &u = index
            .get(&id)
            .ok_or_else(|| parse_err(label_file, ln, format!("node {id} has no feature row")))?;
        raw_labels[u] = Some(class.to_string());
        label_rows += 1;
    }
    if label_rows != n {
        return Err(Error::Data(format!(
            "feature/label row-count mismatch: {n} feature rows, {label_rows} label rows"
        )));
    }
    let classes: Vec<String> = {
        let set: BTreeSet<&String> = raw_labels.iter().flatten().collect();
        let mut v: Vec<String> = set.into_iter().cloned().collect();
        if v.iter().all(|c| c.parse::<i64>().is_ok()) {
            v.sort_by_key(|c| c.parse::<i64>().unwrap());
        }
        v
    };
    let class_index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let labels: Vec<usize> = raw_labels.iter().map(|c| class_index[c.as_deref().unwrap()]).collect();

    let edge_text = read(edge_file)?;
    let mut edges = Vec::new();
    for (ln, line) in content_lines(&edge_text) {
        let mut it = line.split_whitespace();
        let (a, b) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => return Err(parse_err(edge_file, ln, "expected two node ids")),
        };
        let parse = |s: &str| -> Result<usize> {
            let id: i64 = s
                .parse()
                .map_err(|_| parse_err(edge_file, ln, format!("bad node id {s:?}")))?;
            index
                .get(&id)
                .copied()
                .ok_or_else(|| parse_err(edge_file, ln, format!("dangling edge endpoint {id}")))
        };
        edges.push((parse(a)?, parse(b)?));
    }
    if edges.is_empty() {
        return Err(Error::Data(format!("{} has no edges", edge_file.display())));
    }

    let masks = split.apply(&labels, classes.len())?;
    let name = edge_file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    GraphDataset::new(name, n, &edges, features, labels, masks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        let mut f = fs::File::create(&p).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        p
    }

    fn fixture(dir: &Path, edges: &str) -> Result<GraphDataset> {
        let e = write(dir, "g.edges", edges);
        let f = write(
            dir,
            "g.features.csv",
            "# id,f0,f1\n10,1.0,0.0\n20,0.0,1.0\n30,0.5,0.5\n40,1,1\n",
        );
        let l = write(dir, "g.labels.csv", "10,a\n20,b\n30,a\n40,b\n");
        let split = SplitSpec::Fractions {
            train: 0.5,
            val: 0.25,
            seed: 1,
        };
        load_dataset(&e, &f, &l, &split)
    }

    #[test]
    fn loads_and_remaps_ids() {
        let dir = tempfile::tempdir().unwrap();
        let ds = fixture(dir.path(), "# comment\n10 20\n20 30\n30 40\n").unwrap();
        assert_eq!(ds.num_nodes(), 4);
        assert_eq!(ds.num_edges(), 3);
        assert_eq!(ds.num_classes(), 2);
        assert_eq!(ds.labels(), &[0, 1, 0, 1]);
        assert_eq!(ds.features()[[1, 1]], 1.0);
        assert_eq!(ds.masks().train_nodes().len(), 2);
    }

    #[test]
    fn duplicate_edge_lines_collapse() {
        let dir = tempfile::tempdir().unwrap();
        let a = fixture(dir.path(), "10 20\n20 30\n30 40\n").unwrap();
        let b = fixture(dir.path(), "10 20\n20 10\n20 30\n30 40\n10 20\n").unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_eq!(b.raw_edge_count(), 5);
    }

    #[test]
    fn empty_edge_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(fixture(dir.path(), "# nothing\n"), Err(Error::Data(_))));
    }

    #[test]
    fn dangling_endpoint_is_reported_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let err = fixture(dir.path(), "10 20\n20 99\n").unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 2);
                assert!(msg.contains("dangling"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn label_row_mismatch_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e", "1 2\n");
        let f = write(dir.path(), "f", "1,0.0\n2,1.0\n");
        let l = write(dir.path(), "l", "1,0\n");
        let err = load_dataset(&e, &f, &l, &SplitSpec::default()).unwrap_err();
        assert!(err.to_string().contains("row-count mismatch"));
    }

    #[test]
    fn per_class_split_takes_quota() {
        let labels = vec![0, 1, 0, 1, 0, 1, 0, 1, 2, 2];
        let m = SplitSpec::PerClass {
            train_per_class: 2,
            val: 2,
            test: 3,
            seed: 3,
        }
        .apply(&labels, 3)
        .unwrap();
        m.validate().unwrap();
        let train = m.train_nodes();
        assert_eq!(train.len(), 6);
        for c in 0..3 {
            assert_eq!(train.iter().filter(|&&u| labels[u] == c).count(), 2);
        }
        assert_eq!(m.val_nodes().len(), 2);
        assert_eq!(m.test_nodes().len(), 2);
    }
}
