//! Brute-force reference implementations for testing and accuracy checks.
//!
//! Everything here is deliberately naive and shares no code path with the
//! production routines it is compared against: triangles by enumerating
//! vertex triples on a dense matrix, scan statistics by materializing each
//! neighborhood subgraph, and the spectrum by cyclic Jacobi rotations.

use crate::eigen::EigenPairs;
use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::invariants::{InvariantKind, InvariantVector};

pub const MAX_ENUMERATION_N: usize = 2048;
pub const MAX_DENSE_SPECTRUM_N: usize = 512;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix {
            n,
            entries: vec![0.0; n * n],
        }
    }

    pub fn adjacency(g: &SparseGraph) -> Self {
        let mut m = DenseMatrix::zeros(g.n());
        for (u, v) in g.edges() {
            m.set(u, v, 1.0);
            m.set(v, u, 1.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.n + j] = value;
    }

    fn off_diagonal_norm2(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    s += self.get(i, j).powi(2);
                }
            }
        }
        s
    }
}

fn guard(n: usize, limit: usize) -> Result<()> {
    if n > limit {
        return Err(Error::SizeGuard { n, limit });
    }
    Ok(())
}

/// Per-vertex triangle counts by testing every triple `u < v < w`.
pub fn brute_triangles(g: &SparseGraph) -> Result<InvariantVector> {
    let n = g.n();
    guard(n, MAX_ENUMERATION_N)?;
    let a = DenseMatrix::adjacency(g);
    let mut counts = vec![0u64; n];
    for u in 0..n {
        for v in u + 1..n {
            if a.get(u, v) == 0.0 {
                continue;
            }
            for w in v + 1..n {
                if a.get(u, w) != 0.0 && a.get(v, w) != 0.0 {
                    counts[u] += 1;
                    counts[v] += 1;
                    counts[w] += 1;
                }
            }
        }
    }
    Ok(InvariantVector::new(
        InvariantKind::Nl3Exact,
        counts.into_iter().map(|c| c as f64).collect(),
    ))
}

/// Edge count of the subgraph induced by each closed 1-hop neighborhood,
/// built explicitly with `induced_subgraph`.
pub fn brute_scan_statistic(g: &SparseGraph) -> Result<InvariantVector> {
    let n = g.n();
    guard(n, MAX_ENUMERATION_N)?;
    let mut values = Vec::with_capacity(n);
    for v in 0..n {
        let mut ball: Vec<usize> = g.neighbors(v).iter().map(|&u| u as usize).collect();
        ball.push(v);
        ball.sort_unstable();
        let (sub, _) = g.induced_subgraph(&ball)?;
        values.push(sub.m() as f64);
    }
    Ok(InvariantVector::new(InvariantKind::Ss1, values))
}

/// All eigenpairs via cyclic Jacobi rotations, in the same order and sign
/// convention as the Lanczos solver.
pub fn dense_spectrum(g: &SparseGraph) -> Result<EigenPairs> {
    guard(g.n(), MAX_DENSE_SPECTRUM_N)?;
    let (values, vectors) = jacobi_eigen(DenseMatrix::adjacency(g))?;
    let pairs = values.into_iter().zip(vectors).collect();
    Ok(EigenPairs::from_pairs(g, pairs, 0))
}

/// Cyclic Jacobi eigenvalue algorithm. Returns eigenvalues and unit
/// eigenvectors in matching, unspecified order.
pub fn jacobi_eigen(mut a: DenseMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let n = a.n;
    // Accumulated rotations; column j is the eigenvector for diagonal entry j.
    let mut v = DenseMatrix::zeros(n);
    for i in 0..n {
        v.set(i, i, 1.0);
    }
    let total: f64 = a.entries.iter().map(|x| x * x).sum();
    let target = 1e-26 * total.max(f64::MIN_POSITIVE);
    let mut converged = a.off_diagonal_norm2() <= target;
    let mut sweeps = 0;
    while !converged {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence {
                converged: 0,
                wanted: n,
                iterations: sweeps,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut a, p, q, c, s);
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
        converged = a.off_diagonal_norm2() <= target;
    }
    let values = (0..n).map(|i| a.get(i, i)).collect();
    let vectors = (0..n).map(|j| (0..n).map(|k| v.get(k, j)).collect()).collect();
    Ok((values, vectors))
}

/// Apply the rotation `A ← Jᵀ A J` in the (p, q) plane.
fn rotate(a: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64) {
    let n = a.n;
    for k in 0..n {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, c * akp - s * akq);
        a.set(k, q, s * akp + c * akq);
    }
    for k in 0..n {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, c * apk - s * aqk);
        a.set(q, k, s * apk + c * aqk);
    }
}
