//! Immutable symmetric binary adjacency in compressed sparse row form.
//!
//! Raw input arrives as a [`WeightedEdgeList`] (duplicates, reciprocal
//! entries and self-loops allowed). [`SparseGraph::build`] sums the weight of
//! every unordered pair, keeps the pairs whose total is strictly greater than
//! the threshold, and drops self-loops. Every invariant in this crate runs on
//! the resulting [`SparseGraph`].

use crate::error::{Error, Result};

/// Raw weighted edges prior to thresholding.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedEdgeList {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl WeightedEdgeList {
    pub fn new(n: usize) -> Self {
        WeightedEdgeList {
            n,
            edges: Vec::new(),
        }
    }

    pub fn push(&mut self, u: usize, v: usize, w: f64) {
        self.edges.push((u, v, w));
    }

    pub fn validate(&self) -> Result<()> {
        for &(u, v, w) in &self.edges {
            for id in [u, v] {
                if id >= self.n {
                    return Err(Error::VertexOutOfRange { id, n: self.n });
                }
            }
            // NaN fails this check as well.
            if !(w >= 0.0) {
                return Err(Error::NegativeWeight { u, v, weight: w });
            }
        }
        Ok(())
    }

    /// Unordered pairs `(u, v)` with `u <= v` and their summed weight, in
    /// ascending pair order. Self-loops are kept here; `build` drops them.
    ///
    /// Weights of a pair are summed in ascending weight order so the result
    /// does not depend on the order of the input lines.
    pub fn merged_pairs(&self) -> Vec<(usize, usize, f64)> {
        let mut pairs: Vec<(usize, usize, f64)> = self
            .edges
            .iter()
            .map(|&(u, v, w)| (u.min(v), u.max(v), w))
            .collect();
        pairs.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)).then(a.2.total_cmp(&b.2)));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(pairs.len());
        for (u, v, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == u && last.1 == v => last.2 += w,
                _ => merged.push((u, v, w)),
            }
        }
        merged
    }
}

/// Symmetric, loop-free, unweighted adjacency in CSR layout.
///
/// Each undirected edge is stored twice (once per endpoint) and `m` counts it
/// once. Neighbor lists are strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<u32>,
}

impl SparseGraph {
    /// Threshold and binarize a weighted edge list.
    ///
    /// An edge `{u, v}` exists iff `u != v` and the summed weight of all
    /// `(u, v)` and `(v, u)` entries is strictly greater than `threshold`.
    pub fn build(input: &WeightedEdgeList, threshold: f64) -> Result<SparseGraph> {
        if !(threshold >= 0.0) || !threshold.is_finite() {
            return Err(Error::InvalidThreshold(threshold));
        }
        input.validate()?;
        if input.n > u32::MAX as usize {
            return Err(Error::InvalidArgument(format!(
                "{} vertices exceeds the supported maximum",
                input.n
            )));
        }
        let kept: Vec<(usize, usize)> = input
            .merged_pairs()
            .into_iter()
            .filter(|&(u, v, w)| u != v && w > threshold)
            .map(|(u, v, _)| (u, v))
            .collect();
        Ok(Self::from_sorted_pairs(input.n, &kept))
    }

    /// Unweighted convenience constructor; duplicates and loops are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<SparseGraph> {
        let list = WeightedEdgeList {
            n,
            edges: edges.iter().map(|&(u, v)| (u, v, 1.0)).collect(),
        };
        Self::build(&list, 0.0)
    }

    pub fn empty(n: usize) -> SparseGraph {
        SparseGraph {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
        }
    }

    /// `pairs` must be sorted ascending, deduplicated, with `u < v`.
    fn from_sorted_pairs(n: usize, pairs: &[(usize, usize)]) -> SparseGraph {
        let mut row_ptr = vec![0usize; n + 1];
        for &(u, v) in pairs {
            row_ptr[u + 1] += 1;
            row_ptr[v + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let mut fill = row_ptr.clone();
        let mut col_idx = vec![0u32; row_ptr[n]];
        // Row x first receives its smaller neighbors (from pairs (u, x)), all
        // of which precede the pairs (x, v); both runs are ascending.
        for &(u, v) in pairs {
            col_idx[fill[u]] = v as u32;
            fill[u] += 1;
            col_idx[fill[v]] = u as u32;
            fill[v] += 1;
        }
        SparseGraph {
            n,
            row_ptr,
            col_idx,
        }
    }

    /// Build from per-vertex adjacency sets that are already symmetric.
    /// Rows are sorted here.
    fn from_rows(n: usize, mut rows: Vec<Vec<u32>>) -> SparseGraph {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::with_capacity(rows.iter().map(Vec::len).sum());
        for row in rows.iter_mut() {
            row.sort_unstable();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        SparseGraph {
            n,
            row_ptr,
            col_idx,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn m(&self) -> usize {
        self.col_idx.len() / 2
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[u32] {
        &self.col_idx
    }

    #[inline]
    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.col_idx[self.row_ptr[u]..self.row_ptr[u + 1]]
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.row_ptr[u + 1] - self.row_ptr[u]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Undirected edges `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .map(|&v| v as usize)
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        if y.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: y.len(),
            });
        }
        for (u, out) in y.iter_mut().enumerate() {
            *out = self.neighbors(u).iter().map(|&v| x[v as usize]).sum();
        }
        Ok(())
    }

    /// Relabel vertices: old vertex `u` becomes `pi[u]`.
    pub fn permute(&self, pi: &[usize]) -> Result<SparseGraph> {
        check_permutation(pi, self.n)?;
        let mut rows = vec![Vec::new(); self.n];
        for u in 0..self.n {
            rows[pi[u]] = self.neighbors(u).iter().map(|&v| pi[v as usize] as u32).collect();
        }
        Ok(Self::from_rows(self.n, rows))
    }

    /// Subgraph induced by `keep` (strictly increasing ids), relabeled
    /// `0..keep.len()` in order. Returns the graph and `vertex_map[new] = old`.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Result<(SparseGraph, Vec<usize>)> {
        for (i, &id) in keep.iter().enumerate() {
            if id >= self.n {
                return Err(Error::VertexOutOfRange { id, n: self.n });
            }
            if i > 0 && keep[i - 1] >= id {
                return Err(Error::UnsortedVertexSet(i));
            }
        }
        let mut new_id = vec![u32::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            new_id[old] = new as u32;
        }
        let mut row_ptr = Vec::with_capacity(keep.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for &old in keep {
            // Relabeling is monotone, so rows stay sorted.
            col_idx.extend(
                self.neighbors(old)
                    .iter()
                    .map(|&v| new_id[v as usize])
                    .filter(|&v| v != u32::MAX),
            );
            row_ptr.push(col_idx.len());
        }
        let sub = SparseGraph {
            n: keep.len(),
            row_ptr,
            col_idx,
        };
        Ok((sub, keep.to_vec()))
    }

    /// Inverse of a permutation produced for [`SparseGraph::permute`].
    pub fn inverse_permutation(pi: &[usize]) -> Result<Vec<usize>> {
        check_permutation(pi, pi.len())?;
        let mut inv = vec![0; pi.len()];
        for (u, &p) in pi.iter().enumerate() {
            inv[p] = u;
        }
        Ok(inv)
    }
}

fn check_permutation(pi: &[usize], n: usize) -> Result<()> {
    if pi.len() != n {
        return Err(Error::NotPermutation(format!(
            "length {} does not match {} vertices",
            pi.len(),
            n
        )));
    }
    let mut seen = vec![false; n];
    for &p in pi {
        if p >= n {
            return Err(Error::NotPermutation(format!("image {p} out of range")));
        }
        if std::mem::replace(&mut seen[p], true) {
            return Err(Error::NotPermutation(format!("image {p} repeated")));
        }
    }
    Ok(())
}
