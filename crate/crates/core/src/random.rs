//! Seeded random graphs for tests, benchmarks and the `generate` command.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;

/// Erdős–Rényi `G(n, p)` edge list, `(u, v)` with `u > v`.
///
/// Uses geometric skips between successive edges, so the cost is
/// proportional to the number of edges rather than `n²`.
pub fn erdos_renyi_edges(n: usize, p: f64, seed: u64) -> Result<Vec<(usize, usize)>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability {p} not in [0, 1]")));
    }
    let mut edges = Vec::new();
    if n < 2 || p == 0.0 {
        return Ok(edges);
    }
    if p == 1.0 {
        for v in 1..n {
            edges.extend((0..v).map(|w| (v, w)));
        }
        return Ok(edges);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_q = (1.0 - p).ln();
    let (mut v, mut w) = (1usize, -1i64);
    while v < n {
        let r: f64 = rng.random();
        let skip = ((1.0 - r).ln() / log_q).floor();
        w += 1 + if skip.is_finite() { skip as i64 } else { i64::MAX / 4 };
        while v < n && w >= v as i64 {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            edges.push((v, w as usize));
        }
    }
    Ok(edges)
}

pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<SparseGraph> {
    SparseGraph::from_edges(n, &erdos_renyi_edges(n, p, seed)?)
}

/// Uniformly random permutation of `0..n`.
pub fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pi: Vec<usize> = (0..n).collect();
    pi.shuffle(&mut rng);
    pi
}
