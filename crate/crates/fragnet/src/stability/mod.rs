//! Multi-scale community detection.
//!
//! The quality of a partition at scale `t` is
//!
//! ```text
//! Q(t, P) = sum over communities C of
//!           t * W_C / (2m) - (D_C / (2m))^2
//! ```
//!
//! where `W_C` counts intra-community weight over ordered node pairs, `D_C`
//! is the community's total strength, and `2m` the graph's total weight.
//! Maximizing at fixed `t` is equivalent to modularity with resolution
//! `1/t`, so small scales favor many small communities and large scales few
//! large ones.

mod leiden;
mod nvi;
mod scan;

pub use leiden::optimize;
pub use nvi::nvi;
pub use scan::{
    scan_scales, select_robust_scales, NviAggregate, ScaleRecord, ScaleScanResult, ScaleSelection,
    ScanParams, SelectParams,
};

use serde::{Deserialize, Serialize};

use crate::graph::WeightedGraph;
use crate::{Error, Result};

/// A hard partition of `0..n` nodes into dense community labels `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<u32>,
    sizes: Vec<u32>,
}

impl Partition {
    /// Builds a partition from arbitrary labels, renumbering them densely in
    /// order of first appearance.
    pub fn from_labels(labels: &[u32]) -> Self {
        let mut remap: Vec<Option<u32>> = Vec::new();
        let mut assignment = Vec::with_capacity(labels.len());
        let mut sizes: Vec<u32> = Vec::new();
        for &raw in labels {
            let raw = raw as usize;
            if raw >= remap.len() {
                remap.resize(raw + 1, None);
            }
            let dense = match remap[raw] {
                Some(d) => d,
                None => {
                    let d = sizes.len() as u32;
                    remap[raw] = Some(d);
                    sizes.push(0);
                    d
                }
            };
            sizes[dense as usize] += 1;
            assignment.push(dense);
        }
        Partition { assignment, sizes }
    }

    /// Every node in its own community.
    pub fn singletons(n: usize) -> Self {
        Partition {
            assignment: (0..n as u32).collect(),
            sizes: vec![1; n],
        }
    }

    /// All nodes in one community.
    pub fn one_community(n: usize) -> Self {
        Partition {
            assignment: vec![0; n],
            sizes: vec![n as u32],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.assignment.len()
    }

    pub fn num_communities(&self) -> usize {
        self.sizes.len()
    }

    pub fn community_of(&self, v: u32) -> u32 {
        self.assignment[v as usize]
    }

    pub fn assignment(&self) -> &[u32] {
        &self.assignment
    }

    /// Community sizes indexed by label; every entry is >= 1.
    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    /// Member lists per community, each ascending.
    pub fn members(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.sizes.len()];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c as usize].push(v as u32);
        }
        out
    }

    /// Fraction of communities holding exactly one node.
    pub fn singleton_fraction(&self) -> f64 {
        if self.sizes.is_empty() {
            return 0.0;
        }
        self.sizes.iter().filter(|&&s| s == 1).count() as f64 / self.sizes.len() as f64
    }

    /// True when both partitions group nodes identically, ignoring labels.
    pub fn same_grouping(&self, other: &Partition) -> bool {
        if self.num_nodes() != other.num_nodes()
            || self.num_communities() != other.num_communities()
        {
            return false;
        }
        Partition::from_labels(&self.assignment).assignment
            == Partition::from_labels(&other.assignment).assignment
    }
}

/// The quality function for one graph at one Markov scale.
#[derive(Debug, Clone)]
pub struct QualityModel<'g> {
    graph: &'g WeightedGraph,
    scale: f64,
}

impl<'g> QualityModel<'g> {
    /// Binds a graph to a scale `t > 0`.
    pub fn new(graph: &'g WeightedGraph, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Contract(format!(
                "scale must be finite and positive, got {scale}"
            )));
        }
        Ok(QualityModel { graph, scale })
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Evaluates the quality of a partition.
    ///
    /// Per-community contributions are sorted before the final sum, so the
    /// value is exactly invariant under community relabeling. A graph with
    /// no edges scores 0 for every partition.
    pub fn quality(&self, p: &Partition) -> Result<f64> {
        if p.num_nodes() != self.graph.num_nodes() {
            return Err(Error::Contract(format!(
                "partition covers {} nodes but the graph has {}",
                p.num_nodes(),
                self.graph.num_nodes()
            )));
        }
        let two_m = self.graph.total_weight() as f64;
        if two_m == 0.0 {
            return Ok(0.0);
        }
        let k = p.num_communities();
        let mut internal = vec![0.0f64; k];
        let mut strength = vec![0.0f64; k];
        for &(i, j, w) in self.graph.edges() {
            if p.community_of(i) == p.community_of(j) {
                // Ordered pairs: each undirected edge counts twice.
                internal[p.community_of(i) as usize] += 2.0 * w as f64;
            }
        }
        for v in 0..self.graph.num_nodes() {
            strength[p.community_of(v as u32) as usize] += self.graph.degree(v as u32) as f64;
        }
        let mut contributions: Vec<f64> = (0..k)
            .map(|c| {
                let frac = strength[c] / two_m;
                self.scale * internal[c] / two_m - frac * frac
            })
            .collect();
        contributions.sort_by(f64::total_cmp);
        Ok(contributions.iter().sum())
    }
}
