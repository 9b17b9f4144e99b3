//! Dominant eigenpairs of the adjacency matrix.
//!
//! [`top_eigenpairs`] returns the `K` eigenpairs of largest magnitude. The
//! solver is a thick-restart Lanczos iteration with full reorthogonalization
//! (see [`lanczos`](self::lanczos)). A single Krylov sequence can only see one
//! vector per eigenspace, so after the main run the solver repeatedly
//! deflates the pairs it holds and looks for a dominant eigenvalue in the
//! remaining subspace; anything that outranks the weakest held pair is
//! swapped in. This recovers repeated eigenvalues, which are common in
//! sparse graphs (every isolated edge contributes `±1`).
//!
//! Output conventions, shared with the dense oracle:
//!
//! * values sorted by descending `|λ|`, with `λ` before `-λ`;
//! * each vector has unit norm and its largest-magnitude entry is
//!   non-negative (lowest index on ties).

mod lanczos;
pub(crate) mod ordering;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use lanczos::{seeded_rng, Budget, Run};
pub use ordering::{normalize_sign, sort_by_magnitude};

pub const DEFAULT_TOL: f64 = 1e-8;

/// Relative resolution used when deciding whether a deflated eigenvalue
/// outranks a held one.
const RANK_WIDTH: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub k: usize,
    /// Residual bound relative to `max(1, |λ₁|)`.
    pub tol: f64,
    /// Matrix-vector product budget per Lanczos run; `None` means `20·K + 100`.
    pub max_iter: Option<usize>,
}

impl EigenOptions {
    pub fn new(k: usize) -> Self {
        EigenOptions {
            k,
            tol: DEFAULT_TOL,
            max_iter: None,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    pub fn max_iter(&self) -> usize {
        self.max_iter.unwrap_or(20 * self.k + 100)
    }
}

/// Eigenpairs of a symmetric matrix in magnitude order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub n: usize,
    pub values: Vec<f64>,
    /// `vectors[k][v]` is entry `v` of the k-th eigenvector.
    pub vectors: Vec<Vec<f64>>,
    /// `‖A x_k − λ_k x_k‖₂` measured after the solve.
    pub residuals: Vec<f64>,
    /// Matrix-vector products spent, across all runs.
    pub matvecs: usize,
}

impl EigenPairs {
    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// Assemble from unordered pairs: sorts by magnitude, fixes signs and
    /// measures residuals against `g`.
    pub fn from_pairs(g: &SparseGraph, pairs: Vec<(f64, Vec<f64>)>, matvecs: usize) -> Self {
        let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let order = sort_by_magnitude(&values);
        let mut slots: Vec<Option<(f64, Vec<f64>)>> = pairs.into_iter().map(Some).collect();
        let mut out = EigenPairs {
            n: g.n(),
            values: Vec::with_capacity(order.len()),
            vectors: Vec::with_capacity(order.len()),
            residuals: Vec::with_capacity(order.len()),
            matvecs,
        };
        for i in order {
            let (value, mut x) = slots[i].take().expect("order is a permutation");
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if nx > 0.0 {
                x.iter_mut().for_each(|v| *v /= nx);
            }
            normalize_sign(&mut x);
            out.residuals.push(residual(g, value, &x));
            out.values.push(value);
            out.vectors.push(x);
        }
        out
    }

    /// Keep only the leading `k` pairs.
    pub fn truncated(&self, k: usize) -> EigenPairs {
        let k = k.min(self.k());
        EigenPairs {
            n: self.n,
            values: self.values[..k].to_vec(),
            vectors: self.vectors[..k].to_vec(),
            residuals: self.residuals[..k].to_vec(),
            matvecs: self.matvecs,
        }
    }
}

/// `‖A x − λ x‖₂`.
pub fn residual(g: &SparseGraph, value: f64, x: &[f64]) -> f64 {
    let ax = g.matvec(x).expect("vector has graph dimension");
    ax.iter()
        .zip(x)
        .map(|(a, b)| (a - value * b).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// The `min(K, n)` eigenpairs of largest magnitude.
///
/// The starting vectors come from a generator seeded by `n`, so results are
/// reproducible for a given graph.
pub fn top_eigenpairs(g: &SparseGraph, opts: &EigenOptions) -> Result<EigenPairs> {
    let n = g.n();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    if opts.k == 0 {
        return Err(Error::InvalidArgument("eigenpair count must be at least 1".into()));
    }
    if !(opts.tol > 0.0) || !opts.tol.is_finite() {
        return Err(Error::InvalidArgument(format!("tolerance {} must be positive", opts.tol)));
    }
    let k = if opts.k > n {
        log::warn!("requested {} eigenpairs but the graph has {n} vertices; using {n}", opts.k);
        n
    } else {
        opts.k
    };
    let limit = opts.max_iter();
    let mut rng = seeded_rng(n);
    let mut matvecs = 0;

    let mut budget = Budget { used: 0, limit };
    let first = Run {
        graph: g,
        locked: &[],
        want: k,
        tol: opts.tol,
        ceiling: None,
        rng: &mut rng,
    }
    .execute(&mut budget);
    matvecs += budget.used;
    if first.pairs.len() < k {
        return Err(Error::NoConvergence {
            converged: first.converged,
            wanted: k,
            iterations: budget.used,
        });
    }
    let (mut values, mut vectors): (Vec<f64>, Vec<Vec<f64>>) = first.pairs.into_iter().unzip();

    // Look for eigenvalues the Krylov sequence could not see. Each accepted
    // probe displaces a held pair, so at most `n - k` swaps can happen.
    for _ in 0..n - k {
        let weakest = sort_by_magnitude(&values)[k - 1];
        let mut budget = Budget { used: 0, limit };
        let probe = Run {
            graph: g,
            locked: &vectors,
            want: 1,
            tol: opts.tol,
            ceiling: Some(values[weakest].abs() * (1.0 - RANK_WIDTH)),
            rng: &mut rng,
        }
        .execute(&mut budget);
        matvecs += budget.used;
        if probe.below_ceiling {
            break;
        }
        let Some((value, vector)) = probe.pairs.into_iter().next() else {
            return Err(Error::NoConvergence {
                converged: k,
                wanted: k,
                iterations: budget.used,
            });
        };
        if !ordering::ranks_ahead(value, values[weakest], RANK_WIDTH) {
            break;
        }
        log::debug!(
            "deflated probe found {value}, replacing {}",
            values[weakest]
        );
        values[weakest] = value;
        vectors[weakest] = vector;
    }

    let pairs = EigenPairs::from_pairs(g, values.into_iter().zip(vectors).collect(), matvecs);
    let bound = opts.tol * pairs.values[0].abs().max(1.0);
    let converged = pairs.residuals.iter().filter(|&&r| r <= bound).count();
    if converged < k {
        return Err(Error::NoConvergence {
            converged,
            wanted: k,
            iterations: matvecs,
        });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k3() -> SparseGraph {
        SparseGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    fn c4() -> SparseGraph {
        SparseGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn k3_principal_pair() {
        let e = top_eigenpairs(&k3(), &EigenOptions::new(1)).unwrap();
        assert_eq!(e.k(), 1);
        assert!((e.values[0] - 2.0).abs() < 1e-10);
        let expected = 1.0 / 3f64.sqrt();
        for &x in &e.vectors[0] {
            assert!((x - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_graph_has_zero_spectrum() {
        let e = top_eigenpairs(&SparseGraph::empty(3), &EigenOptions::new(2)).unwrap();
        assert_eq!(e.values, vec![0.0, 0.0]);
        assert!(e.residuals.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn c4_tie_prefers_positive() {
        let e = top_eigenpairs(&c4(), &EigenOptions::new(2)).unwrap();
        assert!((e.values[0] - 2.0).abs() < 1e-10);
        assert!((e.values[1] + 2.0).abs() < 1e-10);
        let e1 = top_eigenpairs(&c4(), &EigenOptions::new(1)).unwrap();
        assert!((e1.values[0] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn repeated_eigenvalues_are_recovered() {
        // Three disjoint edges: spectrum {1, 1, 1, -1, -1, -1}.
        let g = SparseGraph::from_edges(6, &[(0, 1), (2, 3), (4, 5)]).unwrap();
        let e = top_eigenpairs(&g, &EigenOptions::new(4)).unwrap();
        let expected = [1.0, 1.0, 1.0, -1.0];
        for (v, x) in e.values.iter().zip(expected) {
            assert!((v - x).abs() < 1e-9, "{:?}", e.values);
        }
    }

    #[test]
    fn k_larger_than_n_is_clamped() {
        let e = top_eigenpairs(&k3(), &EigenOptions::new(10)).unwrap();
        assert_eq!(e.k(), 3);
        assert!((e.values[0] - 2.0).abs() < 1e-10);
        assert!((e.values[1] + 1.0).abs() < 1e-10);
        assert!((e.values[2] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn invalid_arguments() {
        assert!(top_eigenpairs(&SparseGraph::empty(0), &EigenOptions::new(1)).is_err());
        assert!(top_eigenpairs(&k3(), &EigenOptions::new(0)).is_err());
        assert!(top_eigenpairs(&k3(), &EigenOptions::new(1).with_tol(0.0)).is_err());
    }

    #[test]
    fn tiny_budget_reports_non_convergence() {
        let g = SparseGraph::from_edges(
            60,
            &(0..60).map(|i| (i, (i * 7 + 3) % 60)).collect::<Vec<_>>(),
        )
        .unwrap();
        let err = top_eigenpairs(&g, &EigenOptions::new(5).with_max_iter(3)).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { wanted: 5, .. }), "{err}");
    }

    #[test]
    fn deterministic() {
        let g = SparseGraph::from_edges(
            40,
            &(0..40).flat_map(|i| [(i, (i + 1) % 40), (i, (i * 5 + 2) % 40)]).collect::<Vec<_>>(),
        )
        .unwrap();
        let a = top_eigenpairs(&g, &EigenOptions::new(6)).unwrap();
        let b = top_eigenpairs(&g, &EigenOptions::new(6)).unwrap();
        assert_eq!(a, b);
    }
}
