//! Effective community counts and the branching-based fragmentation score
//! between consecutive hierarchy levels.

use serde::{Deserialize, Serialize};

use crate::attributes::{AlignedAttributes, Ideology};
use crate::hierarchy::{overlaps, MultilevelPartition, OverlapTable};
use crate::{Error, Result};

/// Inverse Simpson index: the number of equal-share groups that would give
/// the same concentration. Proportions must be non-negative and sum to 1
/// within 1e-9.
pub fn enc(proportions: &[f64]) -> Result<f64> {
    if proportions.is_empty() {
        return Err(Error::Contract("effective count of an empty list".into()));
    }
    for &p in proportions {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::Contract(format!("bad proportion {p}")));
        }
    }
    // Fixed summation order makes the result exactly permutation-invariant.
    let mut sorted = proportions.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let total: f64 = sorted.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!(
            "proportions sum to {total}, expected 1"
        )));
    }
    let squares: f64 = sorted.iter().map(|p| p * p).sum();
    Ok(1.0 / squares)
}

/// Effective number of children a parent community splits into, from the
/// parent's row of child intersection counts. 1 exactly when the parent
/// maps into a single child.
pub fn effective_branching(child_counts: &[u64]) -> Result<f64> {
    let total: u64 = child_counts.iter().sum();
    if total == 0 {
        return Err(Error::Contract(
            "effective branching of an empty parent".into(),
        ));
    }
    let proportions: Vec<f64> = child_counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| c as f64 / total as f64)
        .collect();
    enc(&proportions)
}

/// Shared core: fragmentation from sorted ((parent, child), count) rows.
fn frag_from_counts(counts: &[((u32, u32), u64)]) -> f64 {
    let total: u64 = counts.iter().map(|&(_, n)| n).sum();
    let mut weighted = 0.0f64;
    let mut i = 0;
    while i < counts.len() {
        let parent = counts[i].0 .0;
        let mut children: Vec<u64> = Vec::new();
        while i < counts.len() && counts[i].0 .0 == parent {
            children.push(counts[i].1);
            i += 1;
        }
        let size: u64 = children.iter().sum();
        let eb = effective_branching(&children).expect("children of a non-empty parent");
        weighted += size as f64 * eb;
    }
    weighted / total as f64
}

fn restricted_counts(
    m: &MultilevelPartition,
    transition: usize,
    mask: &[bool],
) -> Vec<((u32, u32), u64)> {
    let coarse = &m.level(transition).partition;
    let fine = &m.level(transition + 1).partition;
    let mut counts: std::collections::BTreeMap<(u32, u32), u64> = std::collections::BTreeMap::new();
    for v in 0..m.num_nodes() as u32 {
        if mask[v as usize] {
            *counts
                .entry((coarse.community_of(v), fine.community_of(v)))
                .or_insert(0) += 1;
        }
    }
    counts.into_iter().collect()
}

/// Size-weighted mean effective branching across one level transition.
///
/// With a node mask, intersection counts and parent sizes are recomputed
/// over masked nodes only, under the same partitions; parents that the
/// mask misses entirely drop out. Always at least 1.
pub fn frag_transition(
    m: &MultilevelPartition,
    table: &OverlapTable,
    transition: usize,
    subset: Option<&[bool]>,
) -> Result<f64> {
    if transition >= table.num_transitions() || transition + 1 >= m.num_levels() {
        return Err(Error::Contract(format!(
            "transition {transition} out of range for {} levels",
            m.num_levels()
        )));
    }
    match subset {
        None => Ok(frag_from_counts(table.counts(transition))),
        Some(mask) => {
            if mask.len() != m.num_nodes() {
                return Err(Error::Contract(format!(
                    "subset mask covers {} nodes, hierarchy has {}",
                    mask.len(),
                    m.num_nodes()
                )));
            }
            let counts = restricted_counts(m, transition, mask);
            if counts.is_empty() {
                return Err(Error::UndefinedSubgroup(
                    "subset shares no nodes with the partition".into(),
                ));
            }
            Ok(frag_from_counts(&counts))
        }
    }
}

/// Fragmentation of one level transition, overall and per ideology side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransitionFrag {
    pub from_level: usize,
    pub to_level: usize,
    pub label: String,
    pub overall: f64,
    /// Missing when no node carries the ideology.
    pub left: Option<f64>,
    pub right: Option<f64>,
}

/// Per-transition scores plus their arithmetic means. Side means average
/// only the transitions where that side exists; skipped ones are listed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragmentationReport {
    pub transitions: Vec<TransitionFrag>,
    pub overall_mean: f64,
    pub left_mean: Option<f64>,
    pub right_mean: Option<f64>,
    pub num_nodes: usize,
    pub num_left: usize,
    pub num_right: usize,
    pub skipped_left: Vec<usize>,
    pub skipped_right: Vec<usize>,
}

pub(crate) fn level_name(ix: usize) -> String {
    if ix < 26 {
        char::from(b'A' + ix as u8).to_string()
    } else {
        format!("L{ix}")
    }
}

fn mean_present(values: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = values.iter().filter_map(|v| *v).collect();
    if present.is_empty() {
        None
    } else {
        Some(present.iter().sum::<f64>() / present.len() as f64)
    }
}

/// Scores every adjacent level pair and averages the per-transition
/// values. Needs at least two levels. Attributes, when given, add the
/// left- and right-restricted variants.
pub fn frag_overall(
    m: &MultilevelPartition,
    attrs: Option<&AlignedAttributes>,
) -> Result<FragmentationReport> {
    if m.num_levels() < 2 {
        return Err(Error::NoTransitions(format!(
            "{} level(s) retained",
            m.num_levels()
        )));
    }
    if let Some(a) = attrs {
        if a.len() != m.num_nodes() {
            return Err(Error::Contract(format!(
                "attributes cover {} nodes, hierarchy has {}",
                a.len(),
                m.num_nodes()
            )));
        }
    }
    let table = overlaps(m)?;
    let masks = attrs.map(|a| {
        (
            a.ideology_mask(Ideology::Left),
            a.ideology_mask(Ideology::Right),
        )
    });
    let mut transitions = Vec::with_capacity(table.num_transitions());
    let mut skipped_left = Vec::new();
    let mut skipped_right = Vec::new();
    for t in 0..table.num_transitions() {
        let overall = frag_transition(m, &table, t, None)?;
        let side = |mask: Option<&[bool]>, skipped: &mut Vec<usize>| -> Result<Option<f64>> {
            match mask {
                None => Ok(None),
                Some(mask) => match frag_transition(m, &table, t, Some(mask)) {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::UndefinedSubgroup(_)) => {
                        skipped.push(t);
                        Ok(None)
                    }
                    Err(e) => Err(e),
                },
            }
        };
        let left = side(masks.as_ref().map(|(l, _)| l.as_slice()), &mut skipped_left)?;
        let right = side(
            masks.as_ref().map(|(_, r)| r.as_slice()),
            &mut skipped_right,
        )?;
        transitions.push(TransitionFrag {
            from_level: t,
            to_level: t + 1,
            label: format!("{}->{}", level_name(t), level_name(t + 1)),
            overall,
            left,
            right,
        });
    }
    let overall_mean =
        transitions.iter().map(|t| t.overall).sum::<f64>() / transitions.len() as f64;
    let left_mean = mean_present(&transitions.iter().map(|t| t.left).collect::<Vec<_>>());
    let right_mean = mean_present(&transitions.iter().map(|t| t.right).collect::<Vec<_>>());
    Ok(FragmentationReport {
        transitions,
        overall_mean,
        left_mean,
        right_mean,
        num_nodes: m.num_nodes(),
        num_left: attrs.map_or(0, |a| a.count(Ideology::Left)),
        num_right: attrs.map_or(0, |a| a.count(Ideology::Right)),
        skipped_left,
        skipped_right,
    })
}
