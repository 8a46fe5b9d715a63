//! End-to-end orchestration: load, project, scan, select, filter,
//! fragment, compare, correlate, persist.
//!
//! Every stage failure is wrapped with the stage name. Reports are computed
//! fully in memory and written only at the end, so a failed run leaves no
//! partial output behind; a failed write sweeps up whatever it had already
//! written.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attributes::{AlignedAttributes, AttributeTable, Ideology, POSITIONED};
use crate::bipartite::BipartiteGraph;
use crate::fragmentation::frag_overall;
use crate::graph::WeightedGraph;
use crate::hierarchy::filter_singleton_levels;
use crate::io::{
    self, read_graph, CorrelationArtifact, FragmentationArtifact, GraphArtifact, HierarchyArtifact,
    ManifestArtifact, ScanArtifact, SimilarityArtifact, SimilarityLevelReport, SummaryArtifact,
    CORRELATION_FILE, FRAGMENTATION_FILE, GRAPH_FILE, HIERARCHY_FILE, MANIFEST_FILE, SCAN_FILE,
    SIMILARITY_FILE,
};
use crate::seed::stream_seed;
use crate::similarity::{community_vectors, level_similarity, merge_test, NormSet, VectorMode};
use crate::stability::{scan_scales, select_robust_scales, NviAggregate, ScanParams, SelectParams};
use crate::stats::{association_test, Alternative, ContingencyTable};
use crate::{Error, Result};

/// Identity categories used when a config names none, matching a US-style
/// annotation scheme.
pub const DEFAULT_CATEGORIES: [&str; 6] =
    ["women", "black", "lgbtq", "religious", "veteran", "jewish"];

fn default_categories() -> Vec<String> {
    DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect()
}

fn default_min_scale() -> f64 {
    -3.0
}

fn default_max_scale() -> f64 {
    3.0
}

fn default_n_scale() -> usize {
    1000
}

fn default_n_tries() -> usize {
    100
}

fn default_nvi_aggregate() -> NviAggregate {
    NviAggregate::MeanPairwise
}

fn default_window() -> usize {
    5
}

fn default_min_basin() -> usize {
    3
}

fn default_epsilon() -> f64 {
    0.02
}

fn default_singleton_threshold() -> f64 {
    0.9
}

fn default_weighted() -> bool {
    true
}

fn default_norm_set() -> NormSet {
    NormSet::OwnClass
}

fn default_mc_samples() -> usize {
    10_000
}

/// Full run configuration. Field names double as CLI flag names; every
/// numeric default matches the values used for the large co-follow runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Bipartite follower list, one `user<sep>influencer` pair per line.
    /// Exactly one of `edges` and `graph` must be set.
    #[serde(default)]
    pub edges: Option<PathBuf>,
    /// Pre-built weighted graph artifact.
    #[serde(default)]
    pub graph: Option<PathBuf>,
    /// Influencer attribute file (ideology plus identity tags).
    pub attributes: PathBuf,
    #[serde(default = "default_categories")]
    pub categories: Vec<String>,
    #[serde(default = "default_min_scale")]
    pub min_scale: f64,
    #[serde(default = "default_max_scale")]
    pub max_scale: f64,
    #[serde(default = "default_n_scale")]
    pub n_scale: usize,
    #[serde(default = "default_n_tries")]
    pub n_tries: usize,
    #[serde(default = "default_nvi_aggregate")]
    pub nvi_aggregate: NviAggregate,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_min_basin")]
    pub min_basin: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_singleton_threshold")]
    pub singleton_threshold: f64,
    /// Compute the size-weighted similarity tests alongside the raw ones.
    #[serde(default = "default_weighted")]
    pub weighted: bool,
    #[serde(default = "default_norm_set")]
    pub norm_set: NormSet,
    /// Two-sided merge tests instead of the one-sided default.
    #[serde(default)]
    pub two_sided: bool,
    #[serde(default = "default_mc_samples")]
    pub mc_samples: usize,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn load_path(path: &Path) -> Result<RunConfig> {
        let config: RunConfig = io::read_json(path)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match (&self.edges, &self.graph) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "set either `edges` or `graph`, not both".into(),
                ));
            }
            (None, None) => {
                return Err(Error::Config(
                    "one of `edges` (bipartite list) or `graph` (graph artifact) is required"
                        .into(),
                ));
            }
            _ => {}
        }
        if self.categories.is_empty() {
            return Err(Error::Config(
                "at least one identity category is required".into(),
            ));
        }
        self.scan_params()?;
        self.select_params().validate()?;
        if !(self.singleton_threshold > 0.0 && self.singleton_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "singleton threshold must be in (0, 1], got {}",
                self.singleton_threshold
            )));
        }
        if self.mc_samples == 0 {
            return Err(Error::Config("mc_samples must be positive".into()));
        }
        Ok(())
    }

    /// Scan settings with ensembles dropped after summarizing; a full grid
    /// of kept ensembles would hold n_scale * n_tries partitions at once.
    pub fn scan_params(&self) -> Result<ScanParams> {
        let mut p = ScanParams::new(self.min_scale, self.max_scale, self.n_scale, self.n_tries)?;
        p.nvi_aggregate = self.nvi_aggregate;
        p.keep_ensembles = false;
        Ok(p)
    }

    pub fn select_params(&self) -> SelectParams {
        SelectParams {
            window: self.window,
            min_basin: self.min_basin,
            epsilon: self.epsilon,
        }
    }

    pub fn alternative(&self) -> Alternative {
        if self.two_sided {
            Alternative::TwoSided
        } else {
            Alternative::Greater
        }
    }

    /// Hash of the config with the output directory blanked, so the same
    /// analysis into two directories reports the same hash.
    pub fn hash(&self) -> Result<String> {
        let mut canon = self.clone();
        canon.out_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canon)?;
        Ok(crate::seed::fingerprint(&bytes))
    }
}

/// Similarity vectors, pair scores, and merge tests for every level below
/// the root and both vector modes. The weighted tests are skipped (not the
/// unweighted ones) when `weighted` is false.
pub fn similarity_reports(
    m: &crate::hierarchy::MultilevelPartition,
    attrs: &AlignedAttributes,
    norm_set: NormSet,
    weighted: bool,
    alternative: Alternative,
) -> Result<Vec<SimilarityLevelReport>> {
    let mut out = Vec::new();
    for level in 1..m.num_levels() {
        for mode in [VectorMode::Ideology, VectorMode::Identity] {
            let vectors = community_vectors(m, level, attrs, mode)?;
            let pairs = level_similarity(m, level, attrs, mode, norm_set)?;
            let weighted_test = if weighted {
                Some(merge_test(&pairs, true, alternative)?)
            } else {
                None
            };
            let unweighted_test = merge_test(&pairs, false, alternative)?;
            out.push(SimilarityLevelReport {
                level,
                mode,
                vectors,
                pairs,
                weighted_test,
                unweighted_test,
            });
        }
    }
    Ok(out)
}

/// Ideology-by-identity counts over the labeled nodes: each node with a
/// positioned ideology contributes one count per identity tag it carries.
pub fn ideology_identity_counts(attrs: &AlignedAttributes) -> Result<ContingencyTable> {
    let mut counts = vec![vec![0u64; attrs.categories.len()]; POSITIONED.len()];
    for i in 0..attrs.len() {
        let row = match attrs.ideology[i] {
            Ideology::Left => 0,
            Ideology::Center => 1,
            Ideology::Right => 2,
            Ideology::Unlabeled => continue,
        };
        for &c in &attrs.identities[i] {
            counts[row][c as usize] += 1;
        }
    }
    ContingencyTable::new(
        POSITIONED.iter().map(|i| i.as_str().to_string()).collect(),
        attrs.categories.clone(),
        counts,
    )
}

fn load_graph(config: &RunConfig) -> Result<(WeightedGraph, Option<usize>)> {
    match (&config.edges, &config.graph) {
        (Some(path), None) => {
            let bipartite = BipartiteGraph::load_path(path)?;
            let users = bipartite.num_users();
            Ok((bipartite.project()?, Some(users)))
        }
        (None, Some(path)) => {
            let artifact = read_graph(path)?;
            let users = artifact.num_users;
            Ok((artifact.into_graph()?, users))
        }
        _ => Err(Error::Config("exactly one input source is required".into())),
    }
}

/// Runs every stage and writes the run directory. Identical config and seed
/// give byte-identical files.
pub fn run_pipeline(config: &RunConfig) -> Result<SummaryArtifact> {
    config.validate()?;

    let (graph, num_users) = load_graph(config).map_err(|e| e.in_stage("project"))?;

    let aligned = (|| {
        let table = AttributeTable::load_path(&config.attributes, &config.categories)?;
        table.align(graph.node_ids())
    })()
    .map_err(|e| e.in_stage("attributes"))?;

    let scan_params = config.scan_params().map_err(|e| e.in_stage("scan"))?;
    let scan = scan_scales(&graph, &scan_params, config.seed).map_err(|e| e.in_stage("scan"))?;

    let selection =
        select_robust_scales(&scan, &config.select_params()).map_err(|e| e.in_stage("select"))?;

    let filtered = filter_singleton_levels(&selection.levels, config.singleton_threshold)
        .map_err(|e| e.in_stage("filter"))?;

    let fragmentation =
        frag_overall(&filtered, Some(&aligned)).map_err(|e| e.in_stage("fragment"))?;

    let similarity = similarity_reports(
        &filtered,
        &aligned,
        config.norm_set,
        config.weighted,
        config.alternative(),
    )
    .map_err(|e| e.in_stage("similarity"))?;

    let correlation = (|| {
        let table = ideology_identity_counts(&aligned)?;
        association_test(
            &table,
            config.mc_samples,
            stream_seed(config.seed, "correlate/mc", &[]),
        )
    })()
    .map_err(|e| e.in_stage("correlate"))?;

    let summary = (|| {
        let manifest = ManifestArtifact::new(
            config,
            vec![
                GRAPH_FILE.to_string(),
                SCAN_FILE.to_string(),
                HIERARCHY_FILE.to_string(),
                FRAGMENTATION_FILE.to_string(),
                SIMILARITY_FILE.to_string(),
                CORRELATION_FILE.to_string(),
                MANIFEST_FILE.to_string(),
            ],
        )?;
        Ok(SummaryArtifact::new(
            manifest,
            GraphArtifact::new(&graph, num_users),
            ScanArtifact::new(&scan, &scan_params, config.seed, &selection),
            HierarchyArtifact::new(&filtered, graph.node_ids())?,
            FragmentationArtifact::new(fragmentation),
            SimilarityArtifact::new(similarity),
            CorrelationArtifact::new(correlation),
        ))
    })()
    .and_then(|s: SummaryArtifact| write_run(&config.out_dir, &s).map(|()| s))
    .map_err(|e| e.in_stage("write"))?;
    Ok(summary)
}

/// Writes the seven run files, removing any already written on failure.
pub fn write_run(dir: &Path, summary: &SummaryArtifact) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut step = |name: &str, write: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        write(&path)?;
        written.push(path);
        Ok(())
    };
    let result = step(GRAPH_FILE, &|p| io::write_json(p, &summary.graph))
        .and_then(|()| step(SCAN_FILE, &|p| io::write_json(p, &summary.scan)))
        .and_then(|()| step(HIERARCHY_FILE, &|p| io::write_json(p, &summary.hierarchy)))
        .and_then(|()| {
            step(FRAGMENTATION_FILE, &|p| {
                io::write_json(p, &summary.fragmentation)
            })
        })
        .and_then(|()| step(SIMILARITY_FILE, &|p| io::write_json(p, &summary.similarity)))
        .and_then(|()| {
            step(CORRELATION_FILE, &|p| {
                io::write_json(p, &summary.correlation)
            })
        })
        .and_then(|()| step(MANIFEST_FILE, &|p| io::write_json(p, &summary.manifest)));
    if result.is_err() {
        for path in &written {
            let _ = fs::remove_file(path);
        }
    }
    result
}

/// Re-bundles an existing run directory into one summary document.
pub fn bundle_run(dir: &Path) -> Result<SummaryArtifact> {
    let manifest = io::read_manifest(&dir.join(MANIFEST_FILE))?;
    let graph = io::read_graph(&dir.join(GRAPH_FILE))?;
    let scan = io::read_scan(&dir.join(SCAN_FILE))?;
    let hierarchy = io::read_hierarchy(&dir.join(HIERARCHY_FILE))?;
    let fragmentation = io::read_fragmentation(&dir.join(FRAGMENTATION_FILE))?;
    let similarity = io::read_similarity(&dir.join(SIMILARITY_FILE))?;
    let correlation = io::read_correlation(&dir.join(CORRELATION_FILE))?;
    Ok(SummaryArtifact::new(
        manifest,
        graph,
        scan,
        hierarchy,
        fragmentation,
        similarity,
        correlation,
    ))
}
