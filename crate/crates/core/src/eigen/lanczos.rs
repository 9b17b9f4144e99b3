//! Thick-restart Lanczos on the adjacency operator, with full
//! reorthogonalization and optional deflation against locked vectors.
//!
//! The projected matrix is kept dense (`T = Vᵀ A V`) instead of tridiagonal:
//! after a thick restart the kept Ritz vectors couple to the new residual
//! direction, and filling `T` from the full Gram-Schmidt coefficients covers
//! both the plain recurrence and the restarted arrowhead shape.

use nalgebra::{DMatrix, DVector, Dyn, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ordering::sort_by_magnitude;
use crate::graph::SparseGraph;

/// Counts matrix-vector products against a shared budget.
pub(crate) struct Budget {
    pub used: usize,
    pub limit: usize,
}

impl Budget {
    fn take(&mut self) -> bool {
        if self.used >= self.limit {
            return false;
        }
        self.used += 1;
        true
    }
}

pub(crate) struct RunOutcome {
    /// Converged pairs, best-ranked first. Empty when the budget ran out.
    pub pairs: Vec<(f64, Vec<f64>)>,
    /// Wanted pairs meeting the tolerance at the last Rayleigh-Ritz step.
    pub converged: usize,
    /// The run stopped because its dominant Ritz value, widened by its
    /// residual estimate, fell below [`Run::ceiling`].
    pub below_ceiling: bool,
}

pub(crate) struct Run<'a> {
    pub graph: &'a SparseGraph,
    pub locked: &'a [Vec<f64>],
    pub want: usize,
    /// Residual target relative to `max(1, |largest Ritz value|)`.
    pub tol: f64,
    /// Give up early once `|θ| + ‖r‖` for the dominant Ritz pair is below
    /// this. Ritz values lie inside the spectrum, so this is a heuristic:
    /// a dominant eigenvalue the Krylov space has not picked up at all
    /// would go unnoticed.
    pub ceiling: Option<f64>,
    pub rng: &'a mut ChaCha8Rng,
}

impl Run<'_> {
    pub fn execute(self, budget: &mut Budget) -> RunOutcome {
        let n = self.graph.n();
        let dim = n - self.locked.len();
        debug_assert!(self.want >= 1 && self.want <= dim);
        let max_basis = dim.min((2 * self.want + 20).max(self.want + 40));
        let locked = Locked::new(self.locked, n);

        // Columns 0..len hold the orthonormal basis; one spare column.
        let mut basis = DMatrix::<f64>::zeros(n, max_basis + 1);
        let mut len = 0;
        let mut t = DMatrix::<f64>::zeros(max_basis, max_basis);
        let mut scale = 1.0f64;

        let start = random_direction(self.rng, &locked, basis.columns(0, 0));
        basis.set_column(0, &start);
        len += 1;
        let mut w = DVector::<f64>::zeros(n);
        let mut last_converged = 0;

        loop {
            let j = len - 1;
            if !budget.take() {
                return RunOutcome {
                    pairs: Vec::new(),
                    converged: last_converged,
                    below_ceiling: false,
                };
            }
            self.graph
                .matvec_into(basis.column(j).as_slice(), w.as_mut_slice())
                .expect("basis vectors have graph dimension");
            locked.project_out(&mut w);
            let h = orthogonalize(&mut w, basis.columns(0, len));
            for (i, &hi) in h.iter().enumerate() {
                t[(i, j)] = hi;
                t[(j, i)] = hi;
                scale = scale.max(hi.abs());
            }
            let beta = w.norm();
            let s = len;

            if s < max_basis {
                let next = if beta <= 1e-11 * scale {
                    // Invariant subspace reached; continue from a fresh direction.
                    random_direction(self.rng, &locked, basis.columns(0, len))
                } else {
                    &w / beta
                };
                basis.set_column(len, &next);
                len += 1;
                continue;
            }

            // Basis is full: Rayleigh-Ritz on the projected matrix.
            let ritz = RitzSet::new(&t, s, beta);
            let threshold = 0.1 * self.tol * ritz.scale();
            let wanted = &ritz.order[..self.want];
            last_converged = wanted
                .iter()
                .filter(|&&i| ritz.estimate[i] <= threshold)
                .count();
            if last_converged == self.want || s == dim {
                let vectors = ritz.vectors_for(basis.columns(0, s), wanted);
                let pairs: Vec<_> = wanted
                    .iter()
                    .zip(vectors.column_iter())
                    .map(|(&i, x)| (ritz.values[i], x.iter().copied().collect()))
                    .collect();
                return RunOutcome {
                    converged: pairs.len(),
                    pairs,
                    below_ceiling: false,
                };
            }
            if let Some(ceiling) = self.ceiling {
                let top = ritz.order[0];
                if ritz.values[top].abs() + ritz.estimate[top] < ceiling {
                    return RunOutcome {
                        pairs: Vec::new(),
                        converged: last_converged,
                        below_ceiling: true,
                    };
                }
            }

            // Thick restart: keep the best-ranked Ritz vectors, then resume
            // from the residual direction.
            let keep = (s - 1).min(self.want + (max_basis - self.want) / 2);
            let kept = &ritz.order[..keep];
            let mut ritz_vectors = ritz.vectors_for(basis.columns(0, s), kept);
            for mut x in ritz_vectors.column_iter_mut() {
                let nx = x.norm();
                x /= nx;
            }
            basis.columns_mut(0, keep).copy_from(&ritz_vectors);
            len = keep;
            t.fill(0.0);
            for (slot, &i) in kept.iter().enumerate() {
                t[(slot, slot)] = ritz.values[i];
            }
            let mut resume = None;
            if beta > 1e-11 * scale {
                let mut r = &w / beta;
                locked.project_out(&mut r);
                orthogonalize(&mut r, basis.columns(0, len));
                let nr = r.norm();
                if nr > 1e-8 {
                    resume = Some(r / nr);
                }
            }
            let resume =
                resume.unwrap_or_else(|| random_direction(self.rng, &locked, basis.columns(0, len)));
            basis.set_column(len, &resume);
            len += 1;
        }
    }
}

/// Vectors the run must stay orthogonal to, packed column-wise.
struct Locked {
    columns: Option<DMatrix<f64>>,
}

impl Locked {
    fn new(vectors: &[Vec<f64>], n: usize) -> Self {
        let columns = (!vectors.is_empty())
            .then(|| DMatrix::from_fn(n, vectors.len(), |r, c| vectors[c][r]));
        Locked { columns }
    }

    fn project_out(&self, w: &mut DVector<f64>) {
        if let Some(q) = &self.columns {
            orthogonalize(w, q.columns(0, q.ncols()));
        }
    }
}

type Columns<'a> = nalgebra::MatrixView<'a, f64, Dyn, Dyn>;

struct RitzSet {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    estimate: Vec<f64>,
    order: Vec<usize>,
}

impl RitzSet {
    fn new(t: &DMatrix<f64>, s: usize, beta: f64) -> RitzSet {
        let block = t.view((0, 0), (s, s)).into_owned();
        let eig = SymmetricEigen::new(block);
        let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let estimate = (0..s)
            .map(|i| (beta * eig.eigenvectors[(s - 1, i)]).abs())
            .collect();
        let order = sort_by_magnitude(&values);
        RitzSet {
            values,
            vectors: eig.eigenvectors,
            estimate,
            order,
        }
    }

    fn scale(&self) -> f64 {
        self.values.iter().fold(1.0f64, |acc, v| acc.max(v.abs()))
    }

    /// `V·y_i` for each selected Ritz index, as columns.
    fn vectors_for(&self, basis: Columns<'_>, indices: &[usize]) -> DMatrix<f64> {
        let s = basis.ncols();
        let y = DMatrix::from_fn(s, indices.len(), |r, c| self.vectors[(r, indices[c])]);
        basis * y
    }
}

/// Random unit vector orthogonal to the locked vectors and `basis`.
fn random_direction(rng: &mut ChaCha8Rng, locked: &Locked, basis: Columns<'_>) -> DVector<f64> {
    let n = basis.nrows();
    loop {
        let mut v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let before = v.norm();
        locked.project_out(&mut v);
        orthogonalize(&mut v, basis);
        let after = v.norm();
        if after > 1e-6 * before {
            return v / after;
        }
    }
}

/// Two passes of classical Gram-Schmidt; returns the accumulated
/// coefficients.
fn orthogonalize(w: &mut DVector<f64>, against: Columns<'_>) -> DVector<f64> {
    let mut coeffs = DVector::zeros(against.ncols());
    if against.ncols() == 0 {
        return coeffs;
    }
    for _ in 0..2 {
        let h = against.tr_mul(w);
        w.gemv(-1.0, &against, &h, 1.0);
        coeffs += h;
    }
    coeffs
}

pub(crate) fn seeded_rng(n: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0x4c41_4e43_5a4f_5300 ^ n as u64)
}
