//! Ordering and sign conventions shared by the Lanczos solver and the dense
//! oracle, so both report spectra in the same order.

/// Relative width within which two magnitudes count as tied.
const TIE: f64 = 1e-9;

fn magnitudes_tied(a: f64, b: f64, width: f64) -> bool {
    (a.abs() - b.abs()).abs() <= width * a.abs().max(b.abs()).max(1.0)
}

/// Indices of `values` ordered by descending magnitude; tied magnitudes
/// (`λ` vs `-λ`, up to rounding) are ordered by descending algebraic value.
pub fn sort_by_magnitude(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[b]
            .abs()
            .total_cmp(&values[a].abs())
            .then(values[b].total_cmp(&values[a]))
    });
    // An exact sort can leave -2 ahead of 2.0000000000001; repair adjacent
    // near-ties so the algebraic tie-break wins.
    for i in 1..order.len() {
        let mut j = i;
        while j > 0 {
            let (prev, cur) = (values[order[j - 1]], values[order[j]]);
            if magnitudes_tied(prev, cur, TIE) && cur > prev + TIE * prev.abs().max(1.0) {
                order.swap(j - 1, j);
                j -= 1;
            } else {
                break;
            }
        }
    }
    order
}

/// True when `candidate` belongs strictly ahead of `incumbent` in magnitude
/// order, with `width` as the relative resolution of the comparison.
pub(crate) fn ranks_ahead(candidate: f64, incumbent: f64, width: f64) -> bool {
    let slack = width * candidate.abs().max(incumbent.abs()).max(1.0);
    if candidate.abs() > incumbent.abs() + slack {
        return true;
    }
    magnitudes_tied(candidate, incumbent, width) && candidate > incumbent + slack
}

/// Flip `x` so its entry of largest magnitude is non-negative. Entries within
/// a relative `1e-9` of the maximum count as tied and the lowest index decides,
/// so rounding noise between solvers cannot flip the choice.
pub fn normalize_sign(x: &mut [f64]) {
    let max = x.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let pivot = x.iter().position(|v| v.abs() >= max * (1.0 - TIE));
    if pivot.is_some_and(|i| x[i] < 0.0) {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}
