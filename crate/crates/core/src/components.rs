//! Connected components and largest-connected-component extraction.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;

/// Component id per vertex. Ids are assigned in order of each component's
/// smallest vertex, so the component holding vertex 0 is always id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub labels: Vec<usize>,
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    /// Label of the largest component; ties go to the lowest label, which is
    /// the component containing the smallest vertex id.
    pub fn largest(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (label, &size) in self.sizes.iter().enumerate() {
            if best.is_none_or(|b| size > self.sizes[b]) {
                best = Some(label);
            }
        }
        best
    }

    pub fn members(&self, label: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(_, &l)| l == label)
            .map(|(v, _)| v)
            .collect()
    }
}

pub fn connected_components(g: &SparseGraph) -> ComponentLabeling {
    const UNSEEN: usize = usize::MAX;
    let n = g.n();
    let mut labels = vec![UNSEEN; n];
    let mut sizes = Vec::new();
    let mut frontier = VecDeque::new();
    for root in 0..n {
        if labels[root] != UNSEEN {
            continue;
        }
        let label = sizes.len();
        labels[root] = label;
        frontier.push_back(root);
        let mut size = 0;
        while let Some(u) = frontier.pop_front() {
            size += 1;
            for &v in g.neighbors(u) {
                let v = v as usize;
                if labels[v] == UNSEEN {
                    labels[v] = label;
                    frontier.push_back(v);
                }
            }
        }
        sizes.push(size);
    }
    ComponentLabeling { labels, sizes }
}

/// Induced subgraph on the largest component plus `vertex_map[new] = old`.
pub fn largest_connected_component(g: &SparseGraph) -> Result<(SparseGraph, Vec<usize>)> {
    let labeling = connected_components(g);
    let largest = labeling.largest().ok_or(Error::EmptyGraph)?;
    g.induced_subgraph(&labeling.members(largest))
}
