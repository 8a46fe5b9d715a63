//! Per-community attribute vectors, size-weighted cosine similarity, and
//! the intra- versus extra-branch comparison of merge candidates.
//!
//! Communities at one level are compared pairwise; a pair is intra-branch
//! when the two communities share at least one parent at the level above,
//! extra-branch otherwise. Intra pairs are the ones a coarser scale merges.

use serde::{Deserialize, Serialize};

use crate::attributes::{AlignedAttributes, POSITIONED};
use crate::hierarchy::MultilevelPartition;
use crate::stats::{mann_whitney_u, noether_power, Alternative, UMethod};
use crate::{Error, Result};

/// Effect size P(intra > extra) the power estimate is reported at.
pub const POWER_EFFECT: f64 = 0.75;
/// One-sided significance level for the power estimate.
pub const POWER_ALPHA: f64 = 0.05;

/// Which labels the community mean vector runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VectorMode {
    /// One-hot over Left, Center, Right; unlabeled members add nothing.
    Ideology,
    /// Multi-hot over the identity categories; members may carry several.
    Identity,
}

/// Mean label vector of one community.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommunityVector {
    pub level: usize,
    pub community: u32,
    pub mean: Vec<f64>,
    pub size: usize,
}

impl CommunityVector {
    pub fn is_zero(&self) -> bool {
        self.mean.iter().all(|&x| x == 0.0)
    }
}

/// Mean vectors for every community at one level. Component k is the
/// fraction of members carrying label k.
pub fn community_vectors(
    m: &MultilevelPartition,
    level: usize,
    attrs: &AlignedAttributes,
    mode: VectorMode,
) -> Result<Vec<CommunityVector>> {
    if level >= m.num_levels() {
        return Err(Error::Contract(format!(
            "level {level} out of range for {} levels",
            m.num_levels()
        )));
    }
    if attrs.len() != m.num_nodes() {
        return Err(Error::Contract(format!(
            "attributes cover {} nodes, hierarchy has {}",
            attrs.len(),
            m.num_nodes()
        )));
    }
    let part = &m.level(level).partition;
    let dim = match mode {
        VectorMode::Ideology => POSITIONED.len(),
        VectorMode::Identity => attrs.categories.len(),
    };
    let k = part.num_communities();
    let mut counts = vec![vec![0u64; dim]; k];
    let mut sizes = vec![0usize; k];
    for v in 0..m.num_nodes() as u32 {
        let c = part.community_of(v) as usize;
        sizes[c] += 1;
        match mode {
            VectorMode::Ideology => {
                if let Some(ix) = POSITIONED
                    .iter()
                    .position(|&p| p == attrs.ideology[v as usize])
                {
                    counts[c][ix] += 1;
                }
            }
            VectorMode::Identity => {
                for &cat in &attrs.identities[v as usize] {
                    counts[c][cat as usize] += 1;
                }
            }
        }
    }
    Ok((0..k)
        .map(|c| CommunityVector {
            level,
            community: c as u32,
            mean: counts[c]
                .iter()
                .map(|&n| n as f64 / sizes[c] as f64)
                .collect(),
            size: sizes[c],
        })
        .collect())
}

/// Cosine similarity of two non-negative vectors, None when either is
/// zero. Always in [0, 1].
pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    debug_assert_eq!(a.len(), b.len());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb)).min(1.0))
}

/// Cosine scaled by how large the pair is against its normalization set:
/// cos × √(|C_a||C_b|) / mean_geo, where mean_geo averages √(|C_i||C_j|)
/// over the set this pair is normalized within. None when a vector is
/// zero.
pub fn weighted_similarity(a: &CommunityVector, b: &CommunityVector, mean_geo: f64) -> Option<f64> {
    if mean_geo.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return None;
    }
    let cos = cosine(&a.mean, &b.mean)?;
    let geo = ((a.size * b.size) as f64).sqrt();
    Some(geo / mean_geo * cos)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchClass {
    Intra,
    Extra,
}

/// Splits all same-level community pairs by shared parentage: intra when
/// the parent sets one level up intersect. Level 0 has no parents.
pub fn classify_pairs(
    m: &MultilevelPartition,
    level: usize,
) -> Result<Vec<((u32, u32), BranchClass)>> {
    if level == 0 || level >= m.num_levels() {
        return Err(Error::Contract(format!(
            "pair classification needs a level in 1..{}, got {level}",
            m.num_levels()
        )));
    }
    let coarse = &m.level(level - 1).partition;
    let fine = &m.level(level).partition;
    let k = fine.num_communities();
    let mut parents: Vec<std::collections::BTreeSet<u32>> = vec![Default::default(); k];
    for v in 0..m.num_nodes() as u32 {
        parents[fine.community_of(v) as usize].insert(coarse.community_of(v));
    }
    let mut out = Vec::with_capacity(k * (k.saturating_sub(1)) / 2);
    for i in 0..k as u32 {
        for j in (i + 1)..k as u32 {
            let shared = parents[i as usize]
                .intersection(&parents[j as usize])
                .next()
                .is_some();
            out.push((
                (i, j),
                if shared {
                    BranchClass::Intra
                } else {
                    BranchClass::Extra
                },
            ));
        }
    }
    Ok(out)
}

/// Which pairs a pair's weighted similarity is normalized against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSet {
    /// The pair's own branch class (intra with intra, extra with extra).
    OwnClass,
    /// Every pair at the level, pooling both classes.
    AllPairs,
}

/// One compared pair, with both the raw and the size-weighted similarity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairRecord {
    pub a: u32,
    pub b: u32,
    pub class: BranchClass,
    pub cosine: f64,
    pub weighted: f64,
}

/// All pairwise similarities at one level for one vector mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSimilarity {
    pub level: usize,
    pub mode: VectorMode,
    pub norm_set: NormSet,
    pub records: Vec<PairRecord>,
    /// Pairs dropped because a community had no labeled member.
    pub skipped_pairs: usize,
    pub mean_geo_intra: Option<f64>,
    pub mean_geo_extra: Option<f64>,
}

/// Computes vectors, classifies pairs, and scores raw plus weighted
/// similarity at one level. Pairs touching an all-unlabeled community are
/// dropped and counted, not scored.
pub fn level_similarity(
    m: &MultilevelPartition,
    level: usize,
    attrs: &AlignedAttributes,
    mode: VectorMode,
    norm_set: NormSet,
) -> Result<LevelSimilarity> {
    let vectors = community_vectors(m, level, attrs, mode)?;
    let classified = classify_pairs(m, level)?;
    let mut usable: Vec<((u32, u32), BranchClass)> = Vec::new();
    let mut skipped_pairs = 0;
    for &((i, j), class) in &classified {
        if vectors[i as usize].is_zero() || vectors[j as usize].is_zero() {
            skipped_pairs += 1;
        } else {
            usable.push(((i, j), class));
        }
    }
    let mean_geo_over = |want: Option<BranchClass>| -> Option<f64> {
        let geos: Vec<f64> = usable
            .iter()
            .filter(|&&(_, class)| want.is_none() || want == Some(class))
            .map(|&((i, j), _)| {
                ((vectors[i as usize].size * vectors[j as usize].size) as f64).sqrt()
            })
            .collect();
        if geos.is_empty() {
            None
        } else {
            Some(geos.iter().sum::<f64>() / geos.len() as f64)
        }
    };
    let mean_geo_intra = mean_geo_over(Some(BranchClass::Intra));
    let mean_geo_extra = mean_geo_over(Some(BranchClass::Extra));
    let mean_geo_all = mean_geo_over(None);
    let records = usable
        .iter()
        .map(|&((i, j), class)| {
            let norm = match norm_set {
                NormSet::AllPairs => mean_geo_all,
                NormSet::OwnClass => match class {
                    BranchClass::Intra => mean_geo_intra,
                    BranchClass::Extra => mean_geo_extra,
                },
            }
            .expect("usable pair implies a non-empty normalization set");
            let (va, vb) = (&vectors[i as usize], &vectors[j as usize]);
            let cos = cosine(&va.mean, &vb.mean).expect("usable pair has nonzero vectors");
            let weighted =
                weighted_similarity(va, vb, norm).expect("usable pair has nonzero vectors");
            PairRecord {
                a: i,
                b: j,
                class,
                cosine: cos,
                weighted,
            }
        })
        .collect();
    Ok(LevelSimilarity {
        level,
        mode,
        norm_set,
        records,
        skipped_pairs,
        mean_geo_intra,
        mean_geo_extra,
    })
}

/// Intra/extra comparison summary for one level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MergeTest {
    pub level: usize,
    pub mode: VectorMode,
    pub weighted: bool,
    pub alternative: Alternative,
    pub n_intra: usize,
    pub n_extra: usize,
    pub mean_intra: f64,
    pub mean_extra: f64,
    pub u: f64,
    pub p: f64,
    pub method: UMethod,
    /// Power to detect P(intra > extra) = 0.75 at these sample sizes.
    pub power: f64,
}

/// Either a completed comparison or the reason the level was skipped.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MergeOutcome {
    Skipped {
        level: usize,
        n_intra: usize,
        n_extra: usize,
        reason: String,
    },
    Tested(MergeTest),
}

/// Compares intra- against extra-branch similarity with a Mann-Whitney U
/// test. Levels where either class has fewer than two pairs are skipped.
pub fn merge_test(
    sim: &LevelSimilarity,
    weighted: bool,
    alternative: Alternative,
) -> Result<MergeOutcome> {
    let pick = |class: BranchClass| -> Vec<f64> {
        sim.records
            .iter()
            .filter(|r| r.class == class)
            .map(|r| if weighted { r.weighted } else { r.cosine })
            .collect()
    };
    let intra = pick(BranchClass::Intra);
    let extra = pick(BranchClass::Extra);
    if intra.len() < 2 || extra.len() < 2 {
        return Ok(MergeOutcome::Skipped {
            level: sim.level,
            n_intra: intra.len(),
            n_extra: extra.len(),
            reason: "a branch class has fewer than two pairs".into(),
        });
    }
    let test = mann_whitney_u(&intra, &extra, alternative)?;
    let power = noether_power(intra.len(), extra.len(), POWER_EFFECT, POWER_ALPHA)?;
    Ok(MergeOutcome::Tested(MergeTest {
        level: sim.level,
        mode: sim.mode,
        weighted,
        alternative,
        n_intra: intra.len(),
        n_extra: extra.len(),
        mean_intra: intra.iter().sum::<f64>() / intra.len() as f64,
        mean_extra: extra.iter().sum::<f64>() / extra.len() as f64,
        u: test.u,
        p: test.p,
        method: test.method,
        power,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attributes::Ideology;
    use crate::stability::Partition;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn attrs(
        n: usize,
        ideology: &[(usize, Ideology)],
        identities: &[(usize, &[u16])],
        num_cats: usize,
    ) -> AlignedAttributes {
        let mut ide = vec![Ideology::Unlabeled; n];
        for &(i, v) in ideology {
            ide[i] = v;
        }
        let mut ids = vec![Vec::new(); n];
        for &(i, v) in identities {
            ids[i] = v.to_vec();
        }
        AlignedAttributes {
            ideology: ide,
            identities: ids,
            categories: (0..num_cats).map(|c| format!("cat{c}")).collect(),
            unused_rows: 0,
        }
    }

    fn hierarchy(levels: &[&[u32]]) -> MultilevelPartition {
        MultilevelPartition::new(
            levels
                .iter()
                .map(|ls| (Partition::from_labels(ls), None))
                .collect(),
            false,
        )
        .unwrap()
    }

    #[test]
    fn all_left_community_is_a_pure_one_hot() {
        let m = hierarchy(&[&[0, 0, 0, 0]]);
        let a = attrs(
            4,
            &[
                (0, Ideology::Left),
                (1, Ideology::Left),
                (2, Ideology::Left),
                (3, Ideology::Left),
            ],
            &[],
            2,
        );
        let vecs = community_vectors(&m, 0, &a, VectorMode::Ideology).unwrap();
        assert_eq!(vecs.len(), 1);
        assert_eq!(vecs[0].mean, vec![1.0, 0.0, 0.0]);
        assert_eq!(vecs[0].size, 4);
    }

    #[test]
    fn identity_vectors_are_multi_hot_means() {
        let m = hierarchy(&[&[0, 0, 0, 0]]);
        let a = attrs(
            4,
            &[],
            &[(0, &[0]), (1, &[0]), (2, &[0, 1]), (3, &[0, 1])],
            3,
        );
        let vecs = community_vectors(&m, 0, &a, VectorMode::Identity).unwrap();
        assert_eq!(vecs[0].mean, vec![1.0, 0.5, 0.0]);
    }

    #[test]
    fn vectors_match_a_member_tally_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 30;
        let labels: Vec<u32> = (0..n).map(|_| rng.random_range(0..4u32)).collect();
        let m = hierarchy(&[&labels]);
        let cats = 5;
        let idents: Vec<Vec<u16>> = (0..n)
            .map(|_| {
                (0..cats as u16)
                    .filter(|_| rng.random::<f64>() < 0.4)
                    .collect()
            })
            .collect();
        let a = AlignedAttributes {
            ideology: vec![Ideology::Unlabeled; n],
            identities: idents.clone(),
            categories: (0..cats).map(|c| format!("c{c}")).collect(),
            unused_rows: 0,
        };
        let vecs = community_vectors(&m, 0, &a, VectorMode::Identity).unwrap();
        let assignment = m.level(0).partition.assignment();
        for vec in &vecs {
            let members: Vec<usize> = (0..n).filter(|&v| assignment[v] == vec.community).collect();
            for cat in 0..cats {
                let carry = members
                    .iter()
                    .filter(|&&v| idents[v].contains(&(cat as u16)))
                    .count();
                let want = carry as f64 / members.len() as f64;
                assert_eq!(vec.mean[cat], want);
            }
        }
    }

    #[test]
    fn cosine_basics() {
        assert_eq!(cosine(&[1.0, 0.0], &[1.0, 0.0]), Some(1.0));
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 2.0]), Some(0.0));
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 0.0]), None);
        let c = cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    fn cv(size: usize, mean: &[f64]) -> CommunityVector {
        CommunityVector {
            level: 1,
            community: 0,
            mean: mean.to_vec(),
            size,
        }
    }

    #[test]
    fn weighting_follows_the_size_ratio() {
        // Pairs (4,9) and (1,1), both cosine 1: mean geo-mean 3.5.
        let mean_geo = (6.0 + 1.0) / 2.0;
        let big = weighted_similarity(&cv(4, &[1.0, 0.0]), &cv(9, &[1.0, 0.0]), mean_geo).unwrap();
        let small =
            weighted_similarity(&cv(1, &[1.0, 0.0]), &cv(1, &[1.0, 0.0]), mean_geo).unwrap();
        assert!((big - 6.0 / 3.5).abs() < 1e-15);
        assert!((small - 1.0 / 3.5).abs() < 1e-15);
    }

    #[test]
    fn equal_sizes_make_weighting_a_no_op() {
        let a = cv(4, &[0.3, 0.7]);
        let b = cv(4, &[0.9, 0.1]);
        let raw = cosine(&a.mean, &b.mean).unwrap();
        let weighted = weighted_similarity(&a, &b, 4.0).unwrap();
        assert_eq!(weighted.to_bits(), raw.to_bits());
    }

    #[test]
    fn orthogonal_vectors_stay_zero_under_weighting() {
        let v = weighted_similarity(&cv(50, &[1.0, 0.0]), &cv(2, &[0.0, 1.0]), 1.0).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn shared_parent_pairs_are_intra() {
        // Parents {0,1}|{2,3}; children {0}|{1}|{2}|{3}.
        let m = hierarchy(&[&[0, 0, 1, 1], &[0, 1, 2, 3]]);
        let classes = classify_pairs(&m, 1).unwrap();
        let lookup = |i: u32, j: u32| {
            classes
                .iter()
                .find(|&&((a, b), _)| (a, b) == (i, j))
                .unwrap()
                .1
        };
        assert_eq!(lookup(0, 1), BranchClass::Intra);
        assert_eq!(lookup(2, 3), BranchClass::Intra);
        assert_eq!(lookup(0, 2), BranchClass::Extra);
        assert_eq!(lookup(1, 3), BranchClass::Extra);
        assert_eq!(classes.len(), 6);
    }

    #[test]
    fn straddling_child_is_intra_with_both_sides() {
        // Child 1 spans both parents; children 0 and 2 sit in one each.
        let m = hierarchy(&[&[0, 0, 1, 1], &[0, 1, 1, 2]]);
        let classes = classify_pairs(&m, 1).unwrap();
        for &((i, j), class) in &classes {
            if j == 1 || i == 1 {
                assert_eq!(class, BranchClass::Intra, "pair ({i},{j})");
            } else {
                assert_eq!(class, BranchClass::Extra, "pair ({i},{j})");
            }
        }
    }

    #[test]
    fn classification_covers_every_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let coarse: Vec<u32> = (0..20).map(|_| rng.random_range(0..3u32)).collect();
            let fine: Vec<u32> = (0..20).map(|_| rng.random_range(0..7u32)).collect();
            let (pc, pf) = (
                Partition::from_labels(&coarse),
                Partition::from_labels(&fine),
            );
            if pf.num_communities() < pc.num_communities() {
                continue;
            }
            let m = MultilevelPartition::new(vec![(pc, None), (pf.clone(), None)], false).unwrap();
            let classes = classify_pairs(&m, 1).unwrap();
            let k = pf.num_communities();
            assert_eq!(classes.len(), k * (k - 1) / 2);
        }
    }

    #[test]
    fn classify_needs_a_parent_level() {
        let m = hierarchy(&[&[0, 1, 2]]);
        assert!(classify_pairs(&m, 0).is_err());
    }

    /// 8 nodes: parents {0..3}|{4..7}, children pairs. Left labels in the
    /// first parent, Right in the second, so intra pairs compare alike
    /// vectors and extra pairs compare opposites.
    fn polarized_fixture() -> (MultilevelPartition, AlignedAttributes) {
        let m = hierarchy(&[&[0, 0, 0, 0, 1, 1, 1, 1], &[0, 0, 1, 1, 2, 2, 3, 3]]);
        let a = attrs(
            8,
            &[
                (0, Ideology::Left),
                (1, Ideology::Left),
                (2, Ideology::Left),
                (3, Ideology::Left),
                (4, Ideology::Right),
                (5, Ideology::Right),
                (6, Ideology::Right),
                (7, Ideology::Right),
            ],
            &[],
            2,
        );
        (m, a)
    }

    #[test]
    fn polarized_pairs_split_cleanly() {
        let (m, a) = polarized_fixture();
        let sim = level_similarity(&m, 1, &a, VectorMode::Ideology, NormSet::OwnClass).unwrap();
        assert_eq!(sim.records.len(), 6);
        assert_eq!(sim.skipped_pairs, 0);
        for r in &sim.records {
            match r.class {
                BranchClass::Intra => assert_eq!(r.cosine, 1.0),
                BranchClass::Extra => assert_eq!(r.cosine, 0.0),
            }
        }
        // All communities have size 2, so weighting changes nothing.
        for r in &sim.records {
            assert_eq!(r.weighted.to_bits(), r.cosine.to_bits());
        }
    }

    #[test]
    fn merge_test_on_the_polarized_fixture() {
        let (m, a) = polarized_fixture();
        let sim = level_similarity(&m, 1, &a, VectorMode::Ideology, NormSet::OwnClass).unwrap();
        let out = merge_test(&sim, false, Alternative::Greater).unwrap();
        let MergeOutcome::Tested(t) = out else {
            panic!("expected a tested level")
        };
        assert_eq!(t.n_intra, 2);
        assert_eq!(t.n_extra, 4);
        assert_eq!(t.u, 8.0);
        // Both intra values beat all four extra values; exact one-sided p
        // over C(6,2) splits: only this split attains U = 8.
        assert!((t.p - 1.0 / 15.0).abs() < 1e-12);
        assert_eq!(t.mean_intra, 1.0);
        assert_eq!(t.mean_extra, 0.0);
        assert!(t.power > 0.0 && t.power < 1.0);
    }

    #[test]
    fn lone_pair_levels_are_skipped() {
        // Two communities only: a single pair, nothing to compare.
        let m = hierarchy(&[&[0, 0, 0, 0], &[0, 0, 1, 1]]);
        let a = attrs(4, &[(0, Ideology::Left), (2, Ideology::Right)], &[], 2);
        let sim = level_similarity(&m, 1, &a, VectorMode::Ideology, NormSet::OwnClass).unwrap();
        let out = merge_test(&sim, false, Alternative::Greater).unwrap();
        assert!(matches!(out, MergeOutcome::Skipped { .. }));
    }

    #[test]
    fn unlabeled_communities_skip_their_pairs() {
        let m = hierarchy(&[&[0, 0, 0, 0, 0, 0], &[0, 0, 1, 1, 2, 2]]);
        // Community 2 (nodes 4, 5) carries no ideology at all.
        let a = attrs(
            6,
            &[
                (0, Ideology::Left),
                (1, Ideology::Left),
                (2, Ideology::Right),
                (3, Ideology::Right),
            ],
            &[],
            2,
        );
        let sim = level_similarity(&m, 1, &a, VectorMode::Ideology, NormSet::OwnClass).unwrap();
        assert_eq!(sim.skipped_pairs, 2);
        assert_eq!(sim.records.len(), 1);
    }

    #[test]
    fn identical_distributions_are_not_significant() {
        let mixed = [
            (0, Ideology::Left),
            (1, Ideology::Right),
            (2, Ideology::Left),
            (3, Ideology::Right),
            (4, Ideology::Left),
            (5, Ideology::Right),
            (6, Ideology::Left),
            (7, Ideology::Right),
            (8, Ideology::Left),
            (9, Ideology::Right),
        ];
        let m = hierarchy(&[
            &[0, 0, 0, 0, 0, 1, 1, 1, 1, 1],
            &[0, 0, 1, 1, 2, 2, 3, 3, 4, 4],
        ]);
        let a = attrs(10, &mixed, &[], 2);
        let sim = level_similarity(&m, 1, &a, VectorMode::Ideology, NormSet::OwnClass).unwrap();
        let out = merge_test(&sim, false, Alternative::Greater).unwrap();
        if let MergeOutcome::Tested(t) = out {
            assert!(
                t.p > 0.2,
                "uninformative split should not be significant: {}",
                t.p
            );
        } else {
            panic!("expected a tested level");
        }
    }

    #[test]
    fn all_pairs_norm_uses_one_shared_denominator() {
        let (m, a) = polarized_fixture();
        let own = level_similarity(&m, 1, &a, VectorMode::Ideology, NormSet::OwnClass).unwrap();
        let all = level_similarity(&m, 1, &a, VectorMode::Ideology, NormSet::AllPairs).unwrap();
        // Equal sizes everywhere: both normalizations are the identity.
        for (x, y) in own.records.iter().zip(&all.records) {
            assert_eq!(x.weighted.to_bits(), y.weighted.to_bits());
        }
    }
}
