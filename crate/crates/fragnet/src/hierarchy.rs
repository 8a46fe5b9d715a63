//! Ordered multilevel partitions, singleton-level filtering, and the
//! parent/child overlap counts between consecutive levels.
//!
//! Level 0 is the coarsest. Levels need not nest: a fine community may
//! straddle several coarse ones, so overlap counts are kept as sparse
//! tables instead of a tree.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::stability::Partition;
use crate::{Error, Result};

/// One level of the hierarchy: a partition, the scale it came from (if it
/// came from a scan), and its share of single-node communities.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Level {
    pub partition: Partition,
    pub scale: Option<f64>,
    pub singleton_fraction: f64,
}

/// Coarse-to-fine stack of partitions over one node set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultilevelPartition {
    num_nodes: usize,
    levels: Vec<Level>,
    fallback: bool,
}

impl MultilevelPartition {
    /// Builds a hierarchy from (partition, scale) pairs ordered coarse to
    /// fine. All partitions must cover the same node set and community
    /// counts must not decrease.
    pub fn new(levels: Vec<(Partition, Option<f64>)>, fallback: bool) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::EmptyHierarchy("no levels given".into()));
        }
        let num_nodes = levels[0].0.num_nodes();
        for (p, _) in &levels {
            if p.num_nodes() != num_nodes {
                return Err(Error::Contract(format!(
                    "levels must cover the same node set: {} vs {} nodes",
                    num_nodes,
                    p.num_nodes()
                )));
            }
        }
        for pair in levels.windows(2) {
            let (a, b) = (&pair[0].0, &pair[1].0);
            if b.num_communities() < a.num_communities() {
                return Err(Error::Contract(format!(
                    "community counts must not decrease coarse to fine: {} then {}",
                    a.num_communities(),
                    b.num_communities()
                )));
            }
        }
        let levels = levels
            .into_iter()
            .map(|(partition, scale)| {
                let singleton_fraction = partition.singleton_fraction();
                Level {
                    partition,
                    scale,
                    singleton_fraction,
                }
            })
            .collect();
        Ok(MultilevelPartition {
            num_nodes,
            levels,
            fallback,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, ix: usize) -> &Level {
        &self.levels[ix]
    }

    /// Set when the hierarchy is a best-effort single level chosen because
    /// no scale basin qualified.
    pub fn fallback(&self) -> bool {
        self.fallback
    }
}

/// Drops every level whose singleton fraction exceeds `threshold`,
/// keeping the remaining order. Errors when nothing survives.
pub fn filter_singleton_levels(
    m: &MultilevelPartition,
    threshold: f64,
) -> Result<MultilevelPartition> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::Config(format!(
            "singleton threshold must be in (0, 1], got {threshold}"
        )));
    }
    let levels: Vec<Level> = m
        .levels
        .iter()
        .filter(|l| l.singleton_fraction <= threshold)
        .cloned()
        .collect();
    if levels.is_empty() {
        return Err(Error::EmptyHierarchy(format!(
            "every level is more than {threshold} singletons"
        )));
    }
    Ok(MultilevelPartition {
        num_nodes: m.num_nodes,
        levels,
        fallback: m.fallback,
    })
}

/// Sparse intersection counts for each adjacent level pair. Transition
/// `ℓ` maps (community at level ℓ, community at level ℓ+1) to the number
/// of shared nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OverlapTable {
    transitions: Vec<Vec<((u32, u32), u64)>>,
}

impl OverlapTable {
    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    /// All nonzero (coarse, fine) -> count entries, sorted by key.
    pub fn counts(&self, transition: usize) -> &[((u32, u32), u64)] {
        &self.transitions[transition]
    }

    /// Nonzero (fine community, count) pairs under one coarse community.
    pub fn children(&self, transition: usize, coarse: u32) -> Vec<(u32, u64)> {
        self.transitions[transition]
            .iter()
            .filter(|((c, _), _)| *c == coarse)
            .map(|&((_, f), n)| (f, n))
            .collect()
    }

    /// Nonzero (coarse community, count) pairs over one fine community.
    pub fn parents(&self, transition: usize, fine: u32) -> Vec<(u32, u64)> {
        self.transitions[transition]
            .iter()
            .filter(|((_, f), _)| *f == fine)
            .map(|&((c, _), n)| (c, n))
            .collect()
    }
}

/// Tallies node intersections for every adjacent level pair.
pub fn overlaps(m: &MultilevelPartition) -> Result<OverlapTable> {
    if m.num_levels() < 2 {
        return Err(Error::Contract(
            "overlap counting needs at least 2 levels".into(),
        ));
    }
    let mut transitions = Vec::with_capacity(m.num_levels() - 1);
    for pair in m.levels.windows(2) {
        let coarse = &pair[0].partition;
        let fine = &pair[1].partition;
        let mut counts: std::collections::BTreeMap<(u32, u32), u64> =
            std::collections::BTreeMap::new();
        for v in 0..m.num_nodes as u32 {
            *counts
                .entry((coarse.community_of(v), fine.community_of(v)))
                .or_insert(0) += 1;
        }
        transitions.push(counts.into_iter().collect());
    }
    Ok(OverlapTable { transitions })
}

/// Communities at every coarser level that share nodes with the given
/// community, i.e. the union of each member node's memberships walked up
/// the hierarchy. Sorted by (level, community id).
pub fn ancestors(
    m: &MultilevelPartition,
    level: usize,
    community: u32,
) -> Result<Vec<(usize, u32)>> {
    if level == 0 || level >= m.num_levels() {
        return Err(Error::Contract(format!(
            "ancestors need a level in 1..{}, got {level}",
            m.num_levels()
        )));
    }
    let part = &m.level(level).partition;
    if community as usize >= part.num_communities() {
        return Err(Error::Contract(format!(
            "level {level} has {} communities, no id {community}",
            part.num_communities()
        )));
    }
    let nodes: Vec<u32> = (0..m.num_nodes as u32)
        .filter(|&v| part.community_of(v) == community)
        .collect();
    let mut out = Vec::new();
    for lv in 0..level {
        let p = &m.level(lv).partition;
        let set: BTreeSet<u32> = nodes.iter().map(|&v| p.community_of(v)).collect();
        out.extend(set.into_iter().map(|c| (lv, c)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    fn levels_of(labelings: &[&[u32]]) -> MultilevelPartition {
        let levels = labelings
            .iter()
            .map(|ls| (Partition::from_labels(ls), None))
            .collect();
        MultilevelPartition::new(levels, false).unwrap()
    }

    #[test]
    fn constructor_validates_shape() {
        assert!(matches!(
            MultilevelPartition::new(vec![], false),
            Err(Error::EmptyHierarchy(_))
        ));
        let short = Partition::from_labels(&[0, 0, 1]);
        let long = Partition::from_labels(&[0, 0, 1, 1]);
        assert!(
            MultilevelPartition::new(vec![(short, None), (long.clone(), None)], false).is_err()
        );
        let fine = Partition::from_labels(&[0, 1, 2, 3]);
        assert!(MultilevelPartition::new(vec![(fine, None), (long, None)], false).is_err());
    }

    #[test]
    fn filter_drops_only_levels_above_threshold() {
        // Fractions 0.0, 0.5, 0.95: with 20 nodes, 10 communities of which
        // 5 are singletons gives 0.5; 19 singletons + 1 pair next to it.
        let coarse = vec![0u32; 20];
        let mut mid = Vec::new();
        for i in 0..20u32 {
            // 5 pairs then 10 singletons: 15 communities... use exact halves:
            mid.push(if i < 10 { i / 2 } else { 5 + (i - 10) });
        }
        let fine: Vec<u32> = (0..20u32).map(|i| if i < 2 { 0 } else { i - 1 }).collect();
        let m = levels_of(&[&coarse, &mid, &fine]);
        let fr: Vec<f64> = m.levels().iter().map(|l| l.singleton_fraction).collect();
        assert_eq!(fr[0], 0.0);
        assert!((fr[1] - 10.0 / 15.0).abs() < 1e-12);
        assert!((fr[2] - 18.0 / 19.0).abs() < 1e-12);

        let kept = filter_singleton_levels(&m, 0.9).unwrap();
        assert_eq!(kept.num_levels(), 2);
        assert_eq!(kept.level(0).partition.num_communities(), 1);
        assert_eq!(kept.level(1).partition.num_communities(), 15);
    }

    #[test]
    fn filter_errors_when_everything_drops() {
        let singles: Vec<u32> = (0..4).collect();
        let m = levels_of(&[&singles]);
        assert!(matches!(
            filter_singleton_levels(&m, 0.9),
            Err(Error::EmptyHierarchy(_))
        ));
    }

    #[test]
    fn filter_validates_threshold() {
        let m = levels_of(&[&[0, 0, 1]]);
        assert!(filter_singleton_levels(&m, 0.0).is_err());
        assert!(filter_singleton_levels(&m, 1.5).is_err());
        assert!(filter_singleton_levels(&m, 1.0).is_ok());
    }

    #[test]
    fn one_block_splitting_in_half_overlaps_two_and_two() {
        let m = levels_of(&[&[0, 0, 0, 0], &[0, 0, 1, 1]]);
        let table = overlaps(&m).unwrap();
        assert_eq!(table.num_transitions(), 1);
        assert_eq!(table.counts(0), &[((0, 0), 2), ((0, 1), 2)]);
    }

    #[test]
    fn identical_levels_give_a_diagonal_table() {
        let labels = [0u32, 1, 0, 2, 1];
        let m = levels_of(&[&labels, &labels]);
        let table = overlaps(&m).unwrap();
        for &((c, f), n) in table.counts(0) {
            assert_eq!(c, f);
            assert!(n > 0);
        }
        assert_eq!(table.counts(0).len(), 3);
    }

    #[test]
    fn overlaps_need_two_levels() {
        let m = levels_of(&[&[0, 0, 1]]);
        assert!(overlaps(&m).is_err());
    }

    fn random_labels(rng: &mut ChaCha8Rng, n: usize, k: u32) -> Vec<u32> {
        (0..n).map(|_| rng.random_range(0..k)).collect()
    }

    #[test]
    fn overlap_counts_match_a_set_intersection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let coarse = Partition::from_labels(&random_labels(&mut rng, 20, 3));
            let fine = Partition::from_labels(&random_labels(&mut rng, 20, 6));
            if fine.num_communities() < coarse.num_communities() {
                continue; // rare; skip shapes the constructor rejects
            }
            let m =
                MultilevelPartition::new(vec![(coarse.clone(), None), (fine.clone(), None)], false)
                    .unwrap();
            let table = overlaps(&m).unwrap();
            let coarse_members = coarse.members();
            let fine_members = fine.members();
            for (ci, cm) in coarse_members.iter().enumerate() {
                let cset: HashSet<u32> = cm.iter().copied().collect();
                for (fi, fm) in fine_members.iter().enumerate() {
                    let want = fm.iter().filter(|v| cset.contains(v)).count() as u64;
                    let got = table
                        .counts(0)
                        .iter()
                        .find(|((c, f), _)| (*c, *f) == (ci as u32, fi as u32))
                        .map(|&(_, n)| n)
                        .unwrap_or(0);
                    assert_eq!(got, want);
                }
            }
        }
    }

    #[test]
    fn overlap_margins_match_community_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let coarse = Partition::from_labels(&random_labels(&mut rng, 30, 3));
            let fine = Partition::from_labels(&random_labels(&mut rng, 30, 8));
            if fine.num_communities() < coarse.num_communities() {
                continue;
            }
            let m =
                MultilevelPartition::new(vec![(coarse.clone(), None), (fine.clone(), None)], false)
                    .unwrap();
            let table = overlaps(&m).unwrap();
            for (ci, &size) in coarse.sizes().iter().enumerate() {
                let row: u64 = table.children(0, ci as u32).iter().map(|&(_, n)| n).sum();
                assert_eq!(row, size as u64);
            }
            for (fi, &size) in fine.sizes().iter().enumerate() {
                let col: u64 = table.parents(0, fi as u32).iter().map(|&(_, n)| n).sum();
                assert_eq!(col, size as u64);
            }
        }
    }

    #[test]
    fn nested_hierarchy_has_one_ancestor_per_level() {
        let m = levels_of(&[
            &[0, 0, 0, 0, 0, 0],
            &[0, 0, 0, 1, 1, 1],
            &[0, 0, 1, 2, 2, 3],
        ]);
        let anc = ancestors(&m, 2, 3).unwrap();
        assert_eq!(anc, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn straddling_community_reports_both_coarse_parents() {
        let m = levels_of(&[&[0, 0, 1, 1], &[0, 1, 1, 2]]);
        let anc = ancestors(&m, 1, 1).unwrap();
        assert_eq!(anc, vec![(0, 0), (0, 1)]);
    }

    #[test]
    fn immediate_ancestors_equal_nonzero_overlap_parents() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10 {
            let coarse = Partition::from_labels(&random_labels(&mut rng, 25, 3));
            let fine = Partition::from_labels(&random_labels(&mut rng, 25, 7));
            if fine.num_communities() < coarse.num_communities() {
                continue;
            }
            let m = MultilevelPartition::new(vec![(coarse, None), (fine.clone(), None)], false)
                .unwrap();
            let table = overlaps(&m).unwrap();
            for c in 0..fine.num_communities() as u32 {
                let walked: Vec<u32> = ancestors(&m, 1, c)
                    .unwrap()
                    .into_iter()
                    .map(|(_, id)| id)
                    .collect();
                let via_table: Vec<u32> =
                    table.parents(0, c).into_iter().map(|(id, _)| id).collect();
                assert_eq!(walked, via_table);
            }
        }
    }

    #[test]
    fn ancestors_walk_matches_per_node_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let l0 = random_labels(&mut rng, 18, 2);
        let l1 = random_labels(&mut rng, 18, 4);
        let l2 = random_labels(&mut rng, 18, 9);
        let p0 = Partition::from_labels(&l0);
        let p1 = Partition::from_labels(&l1);
        let p2 = Partition::from_labels(&l2);
        if p1.num_communities() < p0.num_communities()
            || p2.num_communities() < p1.num_communities()
        {
            return;
        }
        let m = MultilevelPartition::new(
            vec![(p0.clone(), None), (p1.clone(), None), (p2.clone(), None)],
            false,
        )
        .unwrap();
        for c in 0..p2.num_communities() as u32 {
            let got = ancestors(&m, 2, c).unwrap();
            let mut want: BTreeSet<(usize, u32)> = BTreeSet::new();
            for v in 0..18u32 {
                if p2.community_of(v) == c {
                    want.insert((0, p0.community_of(v)));
                    want.insert((1, p1.community_of(v)));
                }
            }
            assert_eq!(got, want.into_iter().collect::<Vec<_>>());
        }
    }

    #[test]
    fn ancestors_reject_bad_coordinates() {
        let m = levels_of(&[&[0, 0, 1, 1], &[0, 1, 2, 3]]);
        assert!(ancestors(&m, 0, 0).is_err());
        assert!(ancestors(&m, 2, 0).is_err());
        assert!(ancestors(&m, 1, 9).is_err());
    }
}
