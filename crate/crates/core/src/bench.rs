//! Chained versus independent execution of the same invariant set.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::invariants::{compute_all, ComputeConfig, ExecutionMode, InvariantBundle, StageTiming};

#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    pub mode: ExecutionMode,
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
    pub eigensolver_runs: usize,
}

impl ModeReport {
    fn from_bundle(b: &InvariantBundle) -> Self {
        ModeReport {
            mode: b.mode,
            stages: b.timings.clone(),
            total_seconds: b.total_seconds(),
            eigensolver_runs: b.eigensolver_runs,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub invariants: Vec<&'static str>,
    pub independent: ModeReport,
    pub chained: ModeReport,
    /// Chained total over independent total.
    pub ratio: f64,
}

/// Run `config.which` in both modes and check that they agree bit for bit.
/// Fails with [`Error::Mismatch`] naming the first differing output.
pub fn compare_modes(g: &SparseGraph, config: &ComputeConfig) -> Result<BenchReport> {
    let independent = compute_all(g, &config.with_mode(ExecutionMode::Independent))?;
    let chained = compute_all(g, &config.with_mode(ExecutionMode::Chained))?;
    if let Some(what) = first_difference(&chained, &independent) {
        return Err(Error::Mismatch(format!(
            "chained and independent outputs differ in {what}"
        )));
    }
    let independent = ModeReport::from_bundle(&independent);
    let chained_report = ModeReport::from_bundle(&chained);
    let ratio = if independent.total_seconds > 0.0 {
        chained_report.total_seconds / independent.total_seconds
    } else {
        1.0
    };
    Ok(BenchReport {
        n: g.n(),
        m: g.m(),
        k: chained.k,
        invariants: config.which.names(),
        independent,
        chained: chained_report,
        ratio,
    })
}

fn first_difference(a: &InvariantBundle, b: &InvariantBundle) -> Option<&'static str> {
    if a.degree != b.degree {
        return Some("degree");
    }
    if a.ss1 != b.ss1 {
        return Some("ss1");
    }
    if a.nl3 != b.nl3 {
        return Some("nl3");
    }
    if a.cc != b.cc {
        return Some("cc");
    }
    if a.lp != b.lp {
        return Some("lp");
    }
    if a.eigenvalues != b.eigenvalues {
        return Some("eigenvalues");
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::InvariantSet;
    use crate::random::erdos_renyi;

    #[test]
    fn modes_agree_and_chained_solves_once() {
        let g = erdos_renyi(300, 0.05, 11).unwrap();
        let config = ComputeConfig::new(InvariantSet::all()).with_eigenpairs(8);
        let report = compare_modes(&g, &config).unwrap();
        assert_eq!(report.chained.eigensolver_runs, 1);
        assert_eq!(report.independent.eigensolver_runs, 3);
        assert!(report.ratio > 0.0);
    }

    #[test]
    fn degree_only_has_nothing_to_share() {
        let g = erdos_renyi(100, 0.1, 2).unwrap();
        let config = ComputeConfig::new(InvariantSet::only("deg").unwrap());
        let report = compare_modes(&g, &config).unwrap();
        assert_eq!(report.k, 0);
        assert_eq!(report.chained.eigensolver_runs, 0);
        assert_eq!(report.independent.eigensolver_runs, 0);
    }
}
