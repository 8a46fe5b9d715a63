//! Planted hierarchical benchmark graphs with known fragmentation.
//!
//! A plant is a nested block layout: top-level communities split level by
//! level according to exact size fractions, and edge probability depends
//! only on how many levels two nodes share. The realized split proportions
//! equal the planned fractions exactly, so the fragmentation of the plant
//! is known in closed form before any edge is sampled.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attributes::{AttributeTable, Ideology};
use crate::fragmentation::{level_name, FragmentationReport, TransitionFrag};
use crate::graph::WeightedGraph;
use crate::hierarchy::MultilevelPartition;
use crate::seed::stream_rng;
use crate::stability::Partition;
use crate::{Error, Result};

/// Label model for one leaf community: ideology probabilities (remainder
/// unlabeled) and an independent carry probability per identity category.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LeafLabels {
    pub left: f64,
    pub center: f64,
    pub right: f64,
    pub identity: Vec<f64>,
}

/// Recipe for a planted multi-level graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedSpec {
    /// Node count of each coarsest-level community.
    pub root_sizes: Vec<usize>,
    /// Per transition, per parent community (in order): child-size
    /// fractions. Each fraction times the parent size must be a whole
    /// positive node count.
    pub branching: Vec<Vec<Vec<f64>>>,
    /// Edge probability inside a leaf community.
    pub p_in: f64,
    /// Edge probability by number of shared levels: index 0 is pairs in
    /// different top-level communities, up to index L-1 for pairs sharing
    /// everything but the leaf. Length must equal the level count.
    pub p_between: Vec<f64>,
    /// Identity category names, required when `labels` carry identities.
    #[serde(default)]
    pub categories: Vec<String>,
    /// One label model per leaf community, in leaf order.
    #[serde(default)]
    pub labels: Option<Vec<LeafLabels>>,
    pub seed: u64,
}

/// Exact integer layout expanded from the fraction plan.
struct Layout {
    /// Per level: community size list, in community order.
    sizes: Vec<Vec<usize>>,
    /// Per level: node -> community.
    assignments: Vec<Vec<u32>>,
    /// Per leaf: (start, end) node range.
    leaf_ranges: Vec<(usize, usize)>,
    /// Per leaf, per level: the community it sits inside.
    leaf_path: Vec<Vec<u32>>,
    num_nodes: usize,
}

impl PlantedSpec {
    pub fn num_levels(&self) -> usize {
        self.branching.len() + 1
    }

    pub fn num_nodes(&self) -> usize {
        self.root_sizes.iter().sum()
    }

    fn check_probability(p: f64, what: &str) -> Result<()> {
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::Validation(format!("{what} {p} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if self.root_sizes.is_empty() {
            return Err(Error::Validation("no top-level communities".into()));
        }
        if let Some(&bad) = self.root_sizes.iter().find(|&&s| s == 0) {
            return Err(Error::Validation(format!(
                "top-level community of size {bad}"
            )));
        }
        let mut sizes: Vec<usize> = self.root_sizes.clone();
        for (t, transition) in self.branching.iter().enumerate() {
            if transition.len() != sizes.len() {
                return Err(Error::Validation(format!(
                    "transition {t} plans {} parents, level has {}",
                    transition.len(),
                    sizes.len()
                )));
            }
            let mut next = Vec::new();
            for (parent, fractions) in transition.iter().enumerate() {
                if fractions.is_empty() {
                    return Err(Error::Validation(format!(
                        "parent {parent} of transition {t} has no children"
                    )));
                }
                let sum: f64 = fractions.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(Error::Validation(format!(
                        "fractions of parent {parent} in transition {t} sum to {sum}"
                    )));
                }
                for &f in fractions {
                    if !(f > 0.0 && f <= 1.0) {
                        return Err(Error::Validation(format!(
                            "child fraction {f} outside (0, 1]"
                        )));
                    }
                    let exact = f * sizes[parent] as f64;
                    let rounded = exact.round();
                    if (exact - rounded).abs() > 1e-9 || rounded < 1.0 {
                        return Err(Error::Validation(format!(
                            "fraction {f} of a {}-node parent is not a whole positive count",
                            sizes[parent]
                        )));
                    }
                    next.push(rounded as usize);
                }
            }
            sizes = next;
        }
        Self::check_probability(self.p_in, "p_in")?;
        if self.p_between.len() != self.num_levels() {
            return Err(Error::Validation(format!(
                "p_between has {} entries, need one per level ({})",
                self.p_between.len(),
                self.num_levels()
            )));
        }
        for &p in &self.p_between {
            Self::check_probability(p, "p_between")?;
            if p >= self.p_in {
                return Err(Error::Validation(format!(
                    "p_between {p} must stay below p_in {}",
                    self.p_in
                )));
            }
        }
        if let Some(labels) = &self.labels {
            if labels.len() != sizes.len() {
                return Err(Error::Validation(format!(
                    "{} label models for {} leaves",
                    labels.len(),
                    sizes.len()
                )));
            }
            for (i, l) in labels.iter().enumerate() {
                for (p, what) in [(l.left, "left"), (l.center, "center"), (l.right, "right")] {
                    Self::check_probability(p, what)?;
                }
                if l.left + l.center + l.right > 1.0 + 1e-9 {
                    return Err(Error::Validation(format!(
                        "ideology probabilities of leaf {i} exceed 1"
                    )));
                }
                if l.identity.len() != self.categories.len() {
                    return Err(Error::Validation(format!(
                        "leaf {i} has {} identity probabilities for {} categories",
                        l.identity.len(),
                        self.categories.len()
                    )));
                }
                for &p in &l.identity {
                    Self::check_probability(p, "identity probability")?;
                }
            }
        }
        Ok(())
    }

    fn layout(&self) -> Layout {
        let num_nodes = self.num_nodes();
        let mut sizes: Vec<Vec<usize>> = vec![self.root_sizes.clone()];
        for transition in &self.branching {
            let parents = sizes.last().unwrap();
            let mut next = Vec::new();
            for (parent, fractions) in transition.iter().enumerate() {
                for &f in fractions {
                    next.push((f * parents[parent] as f64).round() as usize);
                }
            }
            sizes.push(next);
        }
        // Sizes at every level are contiguous runs in node order, so each
        // level's assignment is a running fill.
        let mut assignments = Vec::with_capacity(sizes.len());
        for level_sizes in &sizes {
            let mut asg = Vec::with_capacity(num_nodes);
            for (c, &s) in level_sizes.iter().enumerate() {
                asg.extend(std::iter::repeat_n(c as u32, s));
            }
            assignments.push(asg);
        }
        let leaf_sizes = sizes.last().unwrap();
        let mut leaf_ranges = Vec::with_capacity(leaf_sizes.len());
        let mut start = 0;
        for &s in leaf_sizes {
            leaf_ranges.push((start, start + s));
            start += s;
        }
        let leaf_path = leaf_ranges
            .iter()
            .map(|&(s, _)| assignments.iter().map(|asg| asg[s]).collect())
            .collect();
        Layout {
            sizes,
            assignments,
            leaf_ranges,
            leaf_path,
            num_nodes,
        }
    }
}

/// Number of levels two distinct leaves share a community at.
fn shared_levels(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// Samples a planted graph. Returns the graph, the planted partitions as
/// ground truth, and the sampled attribute table. Bit-identical for a
/// fixed spec.
pub fn generate(
    spec: &PlantedSpec,
) -> Result<(WeightedGraph, MultilevelPartition, AttributeTable)> {
    spec.validate()?;
    let layout = spec.layout();
    let n = layout.num_nodes;
    let width = n.saturating_sub(1).to_string().len().max(2);
    let node_ids: Vec<String> = (0..n).map(|i| format!("n{i:0width$}")).collect();

    let num_leaves = layout.leaf_ranges.len();
    let block_pairs: Vec<(usize, usize)> = (0..num_leaves)
        .flat_map(|a| (a..num_leaves).map(move |b| (a, b)))
        .collect();
    let mut edges: Vec<(u32, u32, u64)> = block_pairs
        .into_par_iter()
        .map(|(a, b)| {
            let p = if a == b {
                spec.p_in
            } else {
                spec.p_between[shared_levels(&layout.leaf_path[a], &layout.leaf_path[b])]
            };
            let mut rng = stream_rng(spec.seed, "synth/block-pair", &[a as u64, b as u64]);
            let (a_start, a_end) = layout.leaf_ranges[a];
            let (b_start, b_end) = layout.leaf_ranges[b];
            let mut out = Vec::new();
            if p == 0.0 {
                return out;
            }
            for u in a_start..a_end {
                let v_start = if a == b { u + 1 } else { b_start };
                for v in v_start..b_end {
                    if rng.random::<f64>() < p {
                        let extra = (0..3).filter(|_| rng.random::<f64>() < p).count();
                        out.push((u as u32, v as u32, 1 + extra as u64));
                    }
                }
            }
            out
        })
        .flatten()
        .collect();
    edges.sort_unstable();
    let graph = WeightedGraph::new(node_ids.clone(), edges)?;

    let truth = MultilevelPartition::new(
        layout
            .assignments
            .iter()
            .map(|asg| (Partition::from_labels(asg), None))
            .collect(),
        false,
    )?;

    let mut rows: Vec<(String, Ideology, Vec<u16>)> = Vec::with_capacity(n);
    match &spec.labels {
        None => {
            for id in &node_ids {
                rows.push((id.clone(), Ideology::Unlabeled, Vec::new()));
            }
        }
        Some(models) => {
            for (leaf, &(start, end)) in layout.leaf_ranges.iter().enumerate() {
                let model = &models[leaf];
                let mut rng = stream_rng(spec.seed, "synth/labels", &[leaf as u64]);
                for node_id in &node_ids[start..end] {
                    let draw: f64 = rng.random();
                    let ideology = if draw < model.left {
                        Ideology::Left
                    } else if draw < model.left + model.center {
                        Ideology::Center
                    } else if draw < model.left + model.center + model.right {
                        Ideology::Right
                    } else {
                        Ideology::Unlabeled
                    };
                    let identities: Vec<u16> = model
                        .identity
                        .iter()
                        .enumerate()
                        .filter(|&(_, &p)| rng.random::<f64>() < p)
                        .map(|(c, _)| c as u16)
                        .collect();
                    rows.push((node_id.clone(), ideology, identities));
                }
            }
        }
    }
    let attrs = AttributeTable::new(rows, spec.categories.clone())?;
    Ok((graph, truth, attrs))
}

/// The fragmentation the plant is built to have, straight from the size
/// plan: no sampling involved.
pub fn ground_truth_frag(spec: &PlantedSpec) -> Result<FragmentationReport> {
    spec.validate()?;
    let layout = spec.layout();
    let total = layout.num_nodes as f64;
    let mut transitions = Vec::with_capacity(spec.branching.len());
    for (t, transition) in spec.branching.iter().enumerate() {
        let parent_sizes = &layout.sizes[t];
        let mut weighted = 0.0f64;
        for (parent, fractions) in transition.iter().enumerate() {
            let squares: f64 = fractions.iter().map(|f| f * f).sum();
            weighted += parent_sizes[parent] as f64 * (1.0 / squares);
        }
        transitions.push(TransitionFrag {
            from_level: t,
            to_level: t + 1,
            label: format!("{}->{}", level_name(t), level_name(t + 1)),
            overall: weighted / total,
            left: None,
            right: None,
        });
    }
    if transitions.is_empty() {
        return Err(Error::NoTransitions("the plant has a single level".into()));
    }
    let overall_mean =
        transitions.iter().map(|t| t.overall).sum::<f64>() / transitions.len() as f64;
    Ok(FragmentationReport {
        transitions,
        overall_mean,
        left_mean: None,
        right_mean: None,
        num_nodes: layout.num_nodes,
        num_left: 0,
        num_right: 0,
        skipped_left: Vec::new(),
        skipped_right: Vec::new(),
    })
}
