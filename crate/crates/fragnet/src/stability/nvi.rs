//! Normalized variation of information between partitions.

use std::collections::BTreeMap;

use super::Partition;
use crate::{Error, Result};

/// Entropy of a set of counts summing to `n`, as `ln(n) - sum c ln c / n`.
///
/// Counts are sorted before summation so partitions that group nodes
/// identically produce bit-identical entropies regardless of labeling.
fn entropy(counts: &mut [u64], n: f64) -> f64 {
    counts.sort_unstable();
    let sum: f64 = counts
        .iter()
        .map(|&c| {
            let c = c as f64;
            c * c.ln()
        })
        .sum();
    n.ln() - sum / n
}

/// Normalized variation of information between two partitions of the same
/// node set.
///
/// VI(p, q) = 2 H(p, q) - H(p) - H(q), normalized by the joint entropy
/// H(p, q). The result lies in [0, 1], is 0 exactly when the partitions
/// group nodes identically (two single-community partitions included), and
/// is a metric on the space of partitions.
pub fn nvi(p: &Partition, q: &Partition) -> Result<f64> {
    if p.num_nodes() != q.num_nodes() {
        return Err(Error::Contract(format!(
            "partitions cover different node sets ({} vs {} nodes)",
            p.num_nodes(),
            q.num_nodes()
        )));
    }
    if p.num_nodes() == 0 {
        return Err(Error::Contract("nvi needs a non-empty node set".into()));
    }
    let n = p.num_nodes() as f64;

    let mut joint: BTreeMap<(u32, u32), u64> = BTreeMap::new();
    for v in 0..p.num_nodes() as u32 {
        *joint
            .entry((p.community_of(v), q.community_of(v)))
            .or_insert(0) += 1;
    }
    let mut joint_counts: Vec<u64> = joint.into_values().collect();
    let mut p_counts: Vec<u64> = p.sizes().iter().map(|&s| s as u64).collect();
    let mut q_counts: Vec<u64> = q.sizes().iter().map(|&s| s as u64).collect();

    let h_joint = entropy(&mut joint_counts, n);
    let h_p = entropy(&mut p_counts, n);
    let h_q = entropy(&mut q_counts, n);

    if h_joint == 0.0 {
        // Both partitions are a single community: identical by convention.
        return Ok(0.0);
    }
    // Marginals are added first: a + b commutes bitwise, so swapping the
    // arguments gives the identical float.
    let vi = 2.0 * h_joint - (h_p + h_q);
    Ok((vi / h_joint).clamp(0.0, 1.0))
}
