//! Versioned JSON artifacts that decouple the pipeline stages.
//!
//! Every file carries a `schema_version` string checked on read, so a stale
//! intermediate from an older build fails loudly instead of parsing into
//! something subtly wrong. All payloads are plain vectors in a fixed order;
//! writing the same data twice gives byte-identical files.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::fragmentation::FragmentationReport;
use crate::graph::WeightedGraph;
use crate::hierarchy::{self, MultilevelPartition};
use crate::pipeline::RunConfig;
use crate::similarity::{CommunityVector, LevelSimilarity, MergeOutcome, VectorMode};
use crate::stability::{Partition, ScaleScanResult, ScaleSelection, ScanParams};
use crate::stats::Association;
use crate::{Error, Result};

pub const GRAPH_SCHEMA: &str = "fragnet/graph/1";
pub const SCAN_SCHEMA: &str = "fragnet/scan/1";
pub const HIERARCHY_SCHEMA: &str = "fragnet/hierarchy/1";
pub const FRAGMENTATION_SCHEMA: &str = "fragnet/fragmentation/1";
pub const SIMILARITY_SCHEMA: &str = "fragnet/similarity/1";
pub const CORRELATION_SCHEMA: &str = "fragnet/correlation/1";
pub const MANIFEST_SCHEMA: &str = "fragnet/manifest/1";
pub const SUMMARY_SCHEMA: &str = "fragnet/summary/1";

/// Standard file names inside a run directory.
pub const GRAPH_FILE: &str = "graph.json";
pub const SCAN_FILE: &str = "scan.json";
pub const HIERARCHY_FILE: &str = "hierarchy.json";
pub const FRAGMENTATION_FILE: &str = "fragmentation.json";
pub const SIMILARITY_FILE: &str = "similarity.json";
pub const CORRELATION_FILE: &str = "correlation.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

fn check_schema(expected: &'static str, found: &str) -> Result<()> {
    if found == expected {
        Ok(())
    } else {
        Err(Error::SchemaVersion {
            expected: expected.to_string(),
            found: found.to_string(),
        })
    }
}

/// Writes pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes)?;
    Ok(())
}

/// Reads a whole JSON file into `T`.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path)
        .map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// A weighted co-follow graph on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphArtifact {
    pub schema_version: String,
    /// Follower-side population size when the graph came from a bipartite
    /// projection; absent for synthetic or externally built graphs.
    pub num_users: Option<usize>,
    pub node_ids: Vec<String>,
    pub edges: Vec<(u32, u32, u64)>,
}

impl GraphArtifact {
    pub fn new(graph: &WeightedGraph, num_users: Option<usize>) -> Self {
        GraphArtifact {
            schema_version: GRAPH_SCHEMA.to_string(),
            num_users,
            node_ids: graph.node_ids().to_vec(),
            edges: graph.edges().to_vec(),
        }
    }

    /// Rebuilds the graph, re-running construction validation.
    pub fn into_graph(self) -> Result<WeightedGraph> {
        check_schema(GRAPH_SCHEMA, &self.schema_version)?;
        WeightedGraph::restore(self.node_ids, self.edges)
    }
}

pub fn read_graph(path: &Path) -> Result<GraphArtifact> {
    let a: GraphArtifact = read_json(path)?;
    check_schema(GRAPH_SCHEMA, &a.schema_version)?;
    Ok(a)
}

/// One grid point of a scale scan: the summary, never the ensemble.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow {
    pub scale: f64,
    pub num_communities: usize,
    pub quality: f64,
    pub ensemble_nvi: f64,
}

/// Scale-scan summary plus the selected grid indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanArtifact {
    pub schema_version: String,
    pub params: ScanParams,
    pub seed: u64,
    pub rows: Vec<ScanRow>,
    /// Grid indices of the levels the basin selection kept, coarse to fine.
    pub selected: Vec<usize>,
    /// True when no basin qualified and the best-quality scale was kept.
    pub fallback: bool,
}

impl ScanArtifact {
    pub fn new(
        scan: &ScaleScanResult,
        params: &ScanParams,
        seed: u64,
        selection: &ScaleSelection,
    ) -> Self {
        let rows = scan
            .records
            .iter()
            .map(|r| ScanRow {
                scale: r.scale,
                num_communities: r.best.num_communities(),
                quality: r.best_quality,
                ensemble_nvi: r.ensemble_nvi,
            })
            .collect();
        ScanArtifact {
            schema_version: SCAN_SCHEMA.to_string(),
            params: params.clone(),
            seed,
            rows,
            selected: selection.scale_indices.clone(),
            fallback: selection.levels.fallback(),
        }
    }
}

pub fn read_scan(path: &Path) -> Result<ScanArtifact> {
    let a: ScanArtifact = read_json(path)?;
    check_schema(SCAN_SCHEMA, &a.schema_version)?;
    Ok(a)
}

/// One retained level: the full node assignment plus its summary stats.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyLevel {
    pub scale: Option<f64>,
    pub num_communities: usize,
    pub singleton_fraction: f64,
    pub assignment: Vec<u32>,
}

/// One coarse-to-fine audience flow, sized for alluvial rendering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRow {
    pub coarse: u32,
    pub fine: u32,
    pub count: u64,
}

/// A multi-level grouping on disk, with the flows between adjacent levels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HierarchyArtifact {
    pub schema_version: String,
    pub node_ids: Vec<String>,
    pub fallback: bool,
    pub levels: Vec<HierarchyLevel>,
    /// Flows between consecutive levels; empty when only one level exists.
    pub transitions: Vec<Vec<FlowRow>>,
}

impl HierarchyArtifact {
    pub fn new(m: &MultilevelPartition, node_ids: &[String]) -> Result<Self> {
        if node_ids.len() != m.num_nodes() {
            return Err(Error::Contract(format!(
                "{} node ids for a hierarchy over {} nodes",
                node_ids.len(),
                m.num_nodes()
            )));
        }
        let transitions = if m.num_levels() >= 2 {
            let table = hierarchy::overlaps(m)?;
            (0..table.num_transitions())
                .map(|t| {
                    table
                        .counts(t)
                        .iter()
                        .map(|&((coarse, fine), count)| FlowRow {
                            coarse,
                            fine,
                            count,
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::new()
        };
        let levels = m
            .levels()
            .iter()
            .map(|l| HierarchyLevel {
                scale: l.scale,
                num_communities: l.partition.num_communities(),
                singleton_fraction: l.singleton_fraction,
                assignment: l.partition.assignment().to_vec(),
            })
            .collect();
        Ok(HierarchyArtifact {
            schema_version: HIERARCHY_SCHEMA.to_string(),
            node_ids: node_ids.to_vec(),
            fallback: m.fallback(),
            levels,
            transitions,
        })
    }

    /// Rebuilds the hierarchy and cross-checks every stored summary field
    /// against what the assignments imply, so a hand-edited file cannot
    /// smuggle inconsistent flows into later stages.
    pub fn into_hierarchy(self) -> Result<(MultilevelPartition, Vec<String>)> {
        check_schema(HIERARCHY_SCHEMA, &self.schema_version)?;
        let mut rebuilt: Vec<(Partition, Option<f64>)> = Vec::with_capacity(self.levels.len());
        for (ix, level) in self.levels.iter().enumerate() {
            if level.assignment.len() != self.node_ids.len() {
                return Err(Error::Validation(format!(
                    "level {ix} assigns {} nodes but {} ids are listed",
                    level.assignment.len(),
                    self.node_ids.len()
                )));
            }
            let p = Partition::from_labels(&level.assignment);
            if p.assignment() != level.assignment.as_slice() {
                return Err(Error::Validation(format!(
                    "level {ix} labels are not dense first-appearance ids"
                )));
            }
            if p.num_communities() != level.num_communities {
                return Err(Error::Validation(format!(
                    "level {ix} states {} communities, assignment has {}",
                    level.num_communities,
                    p.num_communities()
                )));
            }
            if p.singleton_fraction() != level.singleton_fraction {
                return Err(Error::Validation(format!(
                    "level {ix} singleton fraction disagrees with its assignment"
                )));
            }
            rebuilt.push((p, level.scale));
        }
        let m = MultilevelPartition::new(rebuilt, self.fallback)?;
        let recomputed = if m.num_levels() >= 2 {
            let table = hierarchy::overlaps(&m)?;
            (0..table.num_transitions())
                .map(|t| {
                    table
                        .counts(t)
                        .iter()
                        .map(|&((coarse, fine), count)| FlowRow {
                            coarse,
                            fine,
                            count,
                        })
                        .collect()
                })
                .collect()
        } else {
            Vec::<Vec<FlowRow>>::new()
        };
        if recomputed != self.transitions {
            return Err(Error::Validation(
                "stored transition flows do not match the level assignments".into(),
            ));
        }
        Ok((m, self.node_ids))
    }
}

pub fn read_hierarchy(path: &Path) -> Result<HierarchyArtifact> {
    let a: HierarchyArtifact = read_json(path)?;
    check_schema(HIERARCHY_SCHEMA, &a.schema_version)?;
    Ok(a)
}

/// Fragmentation report on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FragmentationArtifact {
    pub schema_version: String,
    pub report: FragmentationReport,
}

impl FragmentationArtifact {
    pub fn new(report: FragmentationReport) -> Self {
        FragmentationArtifact {
            schema_version: FRAGMENTATION_SCHEMA.to_string(),
            report,
        }
    }
}

pub fn read_fragmentation(path: &Path) -> Result<FragmentationArtifact> {
    let a: FragmentationArtifact = read_json(path)?;
    check_schema(FRAGMENTATION_SCHEMA, &a.schema_version)?;
    Ok(a)
}

/// Similarity output for one level and one vector mode: the per-community
/// vectors, every scored pair, and the merge tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityLevelReport {
    pub level: usize,
    pub mode: VectorMode,
    pub vectors: Vec<CommunityVector>,
    pub pairs: LevelSimilarity,
    /// Absent when the weighted variant was disabled in the config.
    pub weighted_test: Option<MergeOutcome>,
    pub unweighted_test: MergeOutcome,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimilarityArtifact {
    pub schema_version: String,
    pub levels: Vec<SimilarityLevelReport>,
}

impl SimilarityArtifact {
    pub fn new(levels: Vec<SimilarityLevelReport>) -> Self {
        SimilarityArtifact {
            schema_version: SIMILARITY_SCHEMA.to_string(),
            levels,
        }
    }
}

pub fn read_similarity(path: &Path) -> Result<SimilarityArtifact> {
    let a: SimilarityArtifact = read_json(path)?;
    check_schema(SIMILARITY_SCHEMA, &a.schema_version)?;
    Ok(a)
}

/// Ideology-by-identity association on disk. Counts, expected values, and
/// residuals live in the embedded test result; cell proportions of the
/// grand total are added so plots need no arithmetic.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationArtifact {
    pub schema_version: String,
    pub proportions: Vec<Vec<f64>>,
    pub association: Association,
}

impl CorrelationArtifact {
    pub fn new(association: Association) -> Self {
        let total: u64 = association.counts.iter().flatten().sum();
        let proportions = association
            .counts
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&c| {
                        if total == 0 {
                            0.0
                        } else {
                            c as f64 / total as f64
                        }
                    })
                    .collect()
            })
            .collect();
        CorrelationArtifact {
            schema_version: CORRELATION_SCHEMA.to_string(),
            proportions,
            association,
        }
    }
}

pub fn read_correlation(path: &Path) -> Result<CorrelationArtifact> {
    let a: CorrelationArtifact = read_json(path)?;
    check_schema(CORRELATION_SCHEMA, &a.schema_version)?;
    Ok(a)
}

/// What produced a run directory: tool version, seed, and the full config
/// with its hash (the hash ignores the output directory).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestArtifact {
    pub schema_version: String,
    pub tool_version: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: RunConfig,
    pub artifacts: Vec<String>,
}

impl ManifestArtifact {
    pub fn new(config: &RunConfig, artifacts: Vec<String>) -> Result<Self> {
        Ok(ManifestArtifact {
            schema_version: MANIFEST_SCHEMA.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            config_hash: config.hash()?,
            config: config.clone(),
            artifacts,
        })
    }
}

pub fn read_manifest(path: &Path) -> Result<ManifestArtifact> {
    let a: ManifestArtifact = read_json(path)?;
    check_schema(MANIFEST_SCHEMA, &a.schema_version)?;
    Ok(a)
}

/// Every artifact of one run bundled into a single document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummaryArtifact {
    pub schema_version: String,
    pub manifest: ManifestArtifact,
    pub graph: GraphArtifact,
    pub scan: ScanArtifact,
    pub hierarchy: HierarchyArtifact,
    pub fragmentation: FragmentationArtifact,
    pub similarity: SimilarityArtifact,
    pub correlation: CorrelationArtifact,
}

impl SummaryArtifact {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        manifest: ManifestArtifact,
        graph: GraphArtifact,
        scan: ScanArtifact,
        hierarchy: HierarchyArtifact,
        fragmentation: FragmentationArtifact,
        similarity: SimilarityArtifact,
        correlation: CorrelationArtifact,
    ) -> Self {
        SummaryArtifact {
            schema_version: SUMMARY_SCHEMA.to_string(),
            manifest,
            graph,
            scan,
            hierarchy,
            fragmentation,
            similarity,
            correlation,
        }
    }
}

pub fn read_summary(path: &Path) -> Result<SummaryArtifact> {
    let a: SummaryArtifact = read_json(path)?;
    check_schema(SUMMARY_SCHEMA, &a.schema_version)?;
    Ok(a)
}

/// Writes an attribute table in the delimited form the loader accepts.
pub fn write_attributes_csv(path: &Path, table: &crate::attributes::AttributeTable) -> Result<()> {
    let mut out = String::from("influencer,ideology,identities\n");
    for id in table.ids() {
        let (ideology, cats) = table.get(id).expect("own id is present");
        let names: Vec<&str> = cats
            .iter()
            .map(|&c| table.categories()[c as usize].as_str())
            .collect();
        out.push_str(&format!("{id},{},{}\n", ideology.as_str(), names.join(";")));
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attributes::AttributeTable;
    use crate::attributes::Ideology;

    fn small_graph() -> WeightedGraph {
        WeightedGraph::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![(0, 1, 3), (1, 2, 1), (2, 3, 2)],
        )
        .unwrap()
    }

    fn two_level_hierarchy() -> MultilevelPartition {
        MultilevelPartition::new(
            vec![
                (Partition::from_labels(&[0, 0, 1, 1]), Some(10.0)),
                (Partition::from_labels(&[0, 1, 2, 2]), Some(0.5)),
            ],
            false,
        )
        .unwrap()
    }

    #[test]
    fn graph_artifact_round_trips_byte_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(GRAPH_FILE);
        let g = small_graph();
        write_json(&path, &GraphArtifact::new(&g, Some(17))).unwrap();
        let first = fs::read(&path).unwrap();

        let back = read_graph(&path).unwrap();
        assert_eq!(back.num_users, Some(17));
        write_json(&path, &back).unwrap();
        assert_eq!(first, fs::read(&path).unwrap());

        let rebuilt = read_graph(&path).unwrap().into_graph().unwrap();
        assert_eq!(rebuilt.node_ids(), g.node_ids());
        assert_eq!(rebuilt.edges(), g.edges());
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(GRAPH_FILE);
        let mut artifact = GraphArtifact::new(&small_graph(), None);
        artifact.schema_version = "fragnet/graph/0".into();
        write_json(&path, &artifact).unwrap();
        match read_graph(&path) {
            Err(Error::SchemaVersion { expected, found }) => {
                assert_eq!(expected, GRAPH_SCHEMA);
                assert_eq!(found, "fragnet/graph/0");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_reads_as_input_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = read_graph(&dir.path().join("absent.json")).unwrap_err();
        assert!(err.is_input_error(), "got {err:?}");
    }

    #[test]
    fn hierarchy_artifact_round_trips_and_checks_flows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(HIERARCHY_FILE);
        let m = two_level_hierarchy();
        let ids: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        write_json(&path, &HierarchyArtifact::new(&m, &ids).unwrap()).unwrap();
        let first = fs::read(&path).unwrap();

        let artifact = read_hierarchy(&path).unwrap();
        assert_eq!(
            artifact.transitions,
            vec![vec![
                FlowRow {
                    coarse: 0,
                    fine: 0,
                    count: 1
                },
                FlowRow {
                    coarse: 0,
                    fine: 1,
                    count: 1
                },
                FlowRow {
                    coarse: 1,
                    fine: 2,
                    count: 2
                },
            ]]
        );
        let (back, back_ids) = artifact.clone().into_hierarchy().unwrap();
        assert_eq!(back_ids, ids);
        assert_eq!(back.num_levels(), 2);
        assert_eq!(back.level(0).scale, Some(10.0));

        write_json(&path, &HierarchyArtifact::new(&back, &back_ids).unwrap()).unwrap();
        assert_eq!(first, fs::read(&path).unwrap());
    }

    #[test]
    fn tampered_flows_are_rejected() {
        let m = two_level_hierarchy();
        let ids: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let mut artifact = HierarchyArtifact::new(&m, &ids).unwrap();
        artifact.transitions[0][0].count = 4;
        assert!(matches!(
            artifact.into_hierarchy(),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn tampered_level_summary_is_rejected() {
        let m = two_level_hierarchy();
        let ids: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let mut artifact = HierarchyArtifact::new(&m, &ids).unwrap();
        artifact.levels[1].num_communities = 2;
        assert!(matches!(
            artifact.into_hierarchy(),
            Err(Error::Validation(_))
        ));

        let mut sparse = HierarchyArtifact::new(&m, &ids).unwrap();
        sparse.levels[0].assignment = vec![0, 0, 2, 2];
        assert!(matches!(sparse.into_hierarchy(), Err(Error::Validation(_))));
    }

    #[test]
    fn correlation_proportions_sum_to_one() {
        let association = Association {
            chosen: crate::stats::ChosenTest::ChiSquare,
            statistic: Some(1.0),
            df: Some(1),
            p: 0.5,
            standard_error: None,
            low_expected_fraction: 0.0,
            row_labels: vec!["left".into(), "right".into()],
            col_labels: vec!["women".into(), "religious".into()],
            counts: vec![vec![6, 2], vec![2, 10]],
            expected: vec![vec![3.2, 4.8], vec![4.8, 7.2]],
            std_residuals: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
            dropped_rows: vec![],
            dropped_cols: vec![],
        };
        let artifact = CorrelationArtifact::new(association);
        let sum: f64 = artifact.proportions.iter().flatten().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!((artifact.proportions[0][0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn attributes_csv_round_trips_through_the_loader() {
        let cats = vec!["women".to_string(), "religious".to_string()];
        let table = AttributeTable::new(
            vec![
                ("i01".into(), Ideology::Left, vec![0]),
                ("i02".into(), Ideology::Right, vec![0, 1]),
                ("i03".into(), Ideology::Unlabeled, vec![]),
            ],
            cats.clone(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("attributes.csv");
        write_attributes_csv(&path, &table).unwrap();
        let back = AttributeTable::load_path(&path, &cats).unwrap();
        assert_eq!(back.ids(), table.ids());
        assert_eq!(back.get("i02"), Some((Ideology::Right, &[0u16, 1][..])));
        assert_eq!(back.get("i03"), Some((Ideology::Unlabeled, &[][..])));
    }
}
