//! Gromov δ-hyperbolicity by the four-point condition on hop distances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::GraphDataset;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    Exact,
    Sampled,
}

/// Hop distances between all node pairs; `usize::MAX` marks unreachable.
pub fn all_pairs_hops(graph: &GraphDataset) -> Vec<Vec<usize>> {
    (0..graph.num_nodes()).into_par_iter().map(|u| graph.bfs(u)).collect()
}

/// Half the gap between the two largest of the three pair sums.
#[inline]
pub fn four_point_delta(d: &[Vec<usize>], x: usize, y: usize, z: usize, w: usize) -> f64 {
    let s1 = d[x][y] + d[z][w];
    let s2 = d[x][z] + d[y][w];
    let s3 = d[x][w] + d[y][z];
    let (hi, mid) = if s1 >= s2 {
        if s2 >= s3 {
            (s1, s2)
        } else if s1 >= s3 {
            (s1, s3)
        } else {
            (s3, s1)
        }
    } else if s1 >= s3 {
        (s2, s1)
    } else if s2 >= s3 {
        (s2, s3)
    } else {
        (s3, s2)
    };
    (hi - mid) as f64 / 2.0
}

/// δ of a connected graph. Exact mode scans every quadruple (parallel over the
/// first index, max-reduced); sampled mode evaluates `samples` random
/// quadruples drawn from `seed`.
pub fn gromov_delta(graph: &GraphDataset, mode: DeltaMode, samples: usize, seed: u64) -> Result<f64> {
    let n = graph.num_nodes();
    let (count, _) = graph.components();
    if count > 1 {
        return Err(Error::Disconnected(count));
    }
    if n < 4 {
        return Ok(0.0);
    }
    let d = all_pairs_hops(graph);
    Ok(match mode {
        DeltaMode::Exact => (0..n)
            .into_par_iter()
            .map(|x| {
                let mut best = 0.0f64;
                for y in x + 1..n {
                    for z in y + 1..n {
                        for w in z + 1..n {
                            best = best.max(four_point_delta(&d, x, y, z, w));
                        }
                    }
                }
                best
            })
            .reduce(|| 0.0, f64::max),
        DeltaMode::Sampled => {
            if samples == 0 {
                return Err(Error::param("sampled δ needs at least one quadruple"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples)
                .map(|_| {
                    let q: [usize; 4] = std::array::from_fn(|_| rng.gen_range(0..n));
                    four_point_delta(&d, q[0], q[1], q[2], q[3])
                })
                .fold(0.0, f64::max)
        }
    })
}
