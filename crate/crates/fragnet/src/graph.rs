//! Undirected weighted graph used by every downstream stage.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An undirected graph with positive integer edge weights and no self-loops.
///
/// Nodes are indexed `0..n` and carry stable string identifiers sorted
/// lexicographically, so the same input always yields the same indexing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedGraph {
    node_ids: Vec<String>,
    /// Edges as `(i, j, w)` with `i < j`, sorted by `(i, j)`.
    edges: Vec<(u32, u32, u64)>,
    /// Adjacency lists, each sorted by neighbor index. Rebuilt from `edges`.
    #[serde(skip)]
    adjacency: Vec<Vec<(u32, u64)>>,
    /// Sum of incident edge weights per node.
    #[serde(skip)]
    degree: Vec<u64>,
    /// Sum of all degrees, i.e. twice the total edge weight.
    #[serde(skip)]
    total_weight: u64,
}

impl WeightedGraph {
    /// Builds a graph from sorted node ids and weighted edges.
    ///
    /// `edges` entries must reference valid indices, satisfy `i != j`, carry
    /// weight >= 1, and contain each unordered pair at most once.
    pub fn new(node_ids: Vec<String>, edges: Vec<(u32, u32, u64)>) -> Result<Self> {
        let n = node_ids.len();
        if node_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation("node ids must be strictly sorted".into()));
        }
        let mut normalized: Vec<(u32, u32, u64)> = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) references a node index out of range"
                )));
            }
            if a == b {
                return Err(Error::Validation(format!("self-loop on node index {a}")));
            }
            if w == 0 {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) has zero weight"
                )));
            }
            normalized.push((a.min(b), a.max(b), w));
        }
        normalized.sort_unstable();
        if normalized
            .windows(2)
            .any(|w| (w[0].0, w[0].1) == (w[1].0, w[1].1))
        {
            return Err(Error::Validation("duplicate edge".into()));
        }
        let mut g = WeightedGraph {
            node_ids,
            edges: normalized,
            adjacency: Vec::new(),
            degree: Vec::new(),
            total_weight: 0,
        };
        g.rebuild_cache();
        Ok(g)
    }

    /// Recomputes adjacency, degrees, and total weight from the edge list.
    fn rebuild_cache(&mut self) {
        let n = self.node_ids.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut degree = vec![0u64; n];
        for &(i, j, w) in &self.edges {
            adjacency[i as usize].push((j, w));
            adjacency[j as usize].push((i, w));
            degree[i as usize] += w;
            degree[j as usize] += w;
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        self.total_weight = degree.iter().sum();
        self.adjacency = adjacency;
        self.degree = degree;
    }

    /// Restores derived fields after deserialization and re-validates.
    pub fn restore(node_ids: Vec<String>, edges: Vec<(u32, u32, u64)>) -> Result<Self> {
        Self::new(node_ids, edges)
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    /// Index of a node id, if present.
    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.node_ids
            .binary_search_by(|probe| probe.as_str().cmp(id))
            .ok()
            .map(|ix| ix as u32)
    }

    pub fn edges(&self) -> &[(u32, u32, u64)] {
        &self.edges
    }

    pub fn neighbors(&self, v: u32) -> &[(u32, u64)] {
        &self.adjacency[v as usize]
    }

    pub fn degree(&self, v: u32) -> u64 {
        self.degree[v as usize]
    }

    pub fn degrees(&self) -> &[u64] {
        &self.degree
    }

    /// Twice the total edge weight.
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i:02}")).collect()
    }

    #[test]
    fn builds_sorted_adjacency_and_degrees() {
        let g = WeightedGraph::new(ids(4), vec![(2, 0, 3), (0, 1, 1), (1, 3, 2)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1, 1), (0, 2, 3), (1, 3, 2)]);
        assert_eq!(g.neighbors(0), &[(1, 1), (2, 3)]);
        assert_eq!(g.degree(0), 4);
        assert_eq!(g.degree(3), 2);
        assert_eq!(g.total_weight(), 12);
    }

    #[test]
    fn rejects_self_loop_zero_weight_and_duplicates() {
        assert!(WeightedGraph::new(ids(2), vec![(0, 0, 1)]).is_err());
        assert!(WeightedGraph::new(ids(2), vec![(0, 1, 0)]).is_err());
        assert!(WeightedGraph::new(ids(2), vec![(0, 1, 1), (1, 0, 2)]).is_err());
    }

    #[test]
    fn isolated_nodes_have_zero_degree() {
        let g = WeightedGraph::new(ids(3), vec![(0, 1, 5)]).unwrap();
        assert_eq!(g.degree(2), 0);
        assert!(g.neighbors(2).is_empty());
    }

    #[test]
    fn index_of_uses_sorted_ids() {
        let g = WeightedGraph::new(ids(3), vec![]).unwrap();
        assert_eq!(g.index_of("n01"), Some(1));
        assert_eq!(g.index_of("zz"), None);
    }
}
