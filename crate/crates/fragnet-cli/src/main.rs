//! Command-line front end: each analysis stage runs on its own from the
//! previous stage's artifacts, and `run` drives the whole pipeline from a
//! config file.
//!
//! Exit codes: 0 on success, 2 for input problems (bad files, bad flags,
//! schema mismatches), 3 for stage failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fragnet::attributes::AttributeTable;
use fragnet::bipartite::BipartiteGraph;
use fragnet::fragmentation::frag_overall;
use fragnet::hierarchy::filter_singleton_levels;
use fragnet::io::{
    self, FragmentationArtifact, GraphArtifact, HierarchyArtifact, ScanArtifact,
    SimilarityArtifact, SUMMARY_FILE,
};
use fragnet::pipeline::{
    bundle_run, ideology_identity_counts, run_pipeline, similarity_reports, RunConfig,
    DEFAULT_CATEGORIES,
};
use fragnet::seed::stream_seed;
use fragnet::similarity::NormSet;
use fragnet::stability::{
    scan_scales, select_robust_scales, NviAggregate, ScanParams, SelectParams,
};
use fragnet::stats::{association_test, Alternative};
use fragnet::synth::{generate, ground_truth_frag, PlantedSpec};
use fragnet::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fragnet",
    version,
    about = "Multi-scale co-follow fragmentation pipeline"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Project a bipartite follower list into a weighted co-follow graph.
    Project(ProjectArgs),
    /// Scan scales and keep the robust levels as a hierarchy.
    Detect(DetectArgs),
    /// Score fragmentation across a hierarchy's transitions.
    Fragment(FragmentArgs),
    /// Score community similarity and the branch merge tests.
    Similarity(SimilarityArgs),
    /// Test ideology-by-identity association.
    Correlate(CorrelateArgs),
    /// Generate a planted benchmark fixture.
    Synth(SynthArgs),
    /// Bundle a run directory into one summary document.
    Report(ReportArgs),
    /// Run the full pipeline from a config file.
    Run(RunArgs),
}

fn parse_aggregate(s: &str) -> std::result::Result<NviAggregate, String> {
    match s {
        "mean_pairwise" => Ok(NviAggregate::MeanPairwise),
        "median_pairwise" => Ok(NviAggregate::MedianPairwise),
        other => Err(format!(
            "unknown aggregate '{other}' (use mean_pairwise or median_pairwise)"
        )),
    }
}

fn parse_norm_set(s: &str) -> std::result::Result<NormSet, String> {
    match s {
        "own_class" => Ok(NormSet::OwnClass),
        "all_pairs" => Ok(NormSet::AllPairs),
        other => Err(format!(
            "unknown norm set '{other}' (use own_class or all_pairs)"
        )),
    }
}

fn default_categories() -> Vec<String> {
    DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect()
}

#[derive(Args)]
struct ProjectArgs {
    /// Bipartite follower list, one `user<sep>influencer` pair per line.
    #[arg(long)]
    edges: PathBuf,
    /// Output graph artifact path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    /// Input graph artifact.
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    min_scale: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    max_scale: f64,
    #[arg(long, default_value_t = 1000)]
    n_scale: usize,
    #[arg(long, default_value_t = 100)]
    n_tries: usize,
    #[arg(long, default_value = "mean_pairwise", value_parser = parse_aggregate)]
    nvi_aggregate: NviAggregate,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    window: usize,
    #[arg(long, default_value_t = 3)]
    min_basin: usize,
    #[arg(long, default_value_t = 0.02)]
    epsilon: f64,
    /// Drop levels whose singleton share exceeds this; 1.0 keeps everything.
    #[arg(long, default_value_t = 0.9)]
    singleton_threshold: f64,
    /// Output scan summary path.
    #[arg(long)]
    out_scan: PathBuf,
    /// Output hierarchy path.
    #[arg(long)]
    out_hierarchy: PathBuf,
}

#[derive(Args)]
struct FragmentArgs {
    /// Input hierarchy artifact.
    #[arg(long)]
    hierarchy: PathBuf,
    /// Attribute file; omit to score only the unrestricted values.
    #[arg(long)]
    attributes: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = default_categories())]
    categories: Vec<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimilarityArgs {
    /// Input hierarchy artifact.
    #[arg(long)]
    hierarchy: PathBuf,
    #[arg(long)]
    attributes: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = default_categories())]
    categories: Vec<String>,
    #[arg(long, default_value = "own_class", value_parser = parse_norm_set)]
    norm_set: NormSet,
    /// Compute the size-weighted tests alongside the raw ones.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    weighted: bool,
    /// Two-sided merge tests instead of the one-sided default.
    #[arg(long)]
    two_sided: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorrelateArgs {
    #[arg(long)]
    attributes: PathBuf,
    /// Restrict to the nodes of this hierarchy; omit to use every row.
    #[arg(long)]
    hierarchy: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = default_categories())]
    categories: Vec<String>,
    #[arg(long, default_value_t = 10_000)]
    mc_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Planted-hierarchy spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Directory for the fixture files.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Run directory holding the stage artifacts.
    #[arg(long)]
    dir: PathBuf,
    /// Output path; defaults to summary.json inside the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn alternative(two_sided: bool) -> Alternative {
    if two_sided {
        Alternative::TwoSided
    } else {
        Alternative::Greater
    }
}

fn load_hierarchy(path: &Path) -> Result<(fragnet::hierarchy::MultilevelPartition, Vec<String>)> {
    io::read_hierarchy(path)?.into_hierarchy()
}

fn cmd_project(args: &ProjectArgs) -> Result<()> {
    let bipartite = BipartiteGraph::load_path(&args.edges)?;
    let users = bipartite.num_users();
    let graph = bipartite.project()?;
    io::write_json(&args.out, &GraphArtifact::new(&graph, Some(users)))?;
    eprintln!(
        "projected {} users x {} influencers into {} weighted edges",
        users,
        graph.num_nodes(),
        graph.edges().len()
    );
    Ok(())
}

fn cmd_detect(args: &DetectArgs) -> Result<()> {
    let graph = io::read_graph(&args.graph)?.into_graph()?;
    let mut params = ScanParams::new(args.min_scale, args.max_scale, args.n_scale, args.n_tries)?;
    params.nvi_aggregate = args.nvi_aggregate;
    params.keep_ensembles = false;
    let scan = scan_scales(&graph, &params, args.seed)?;
    let selection = select_robust_scales(
        &scan,
        &SelectParams {
            window: args.window,
            min_basin: args.min_basin,
            epsilon: args.epsilon,
        },
    )?;
    let filtered = filter_singleton_levels(&selection.levels, args.singleton_threshold)?;
    io::write_json(
        &args.out_scan,
        &ScanArtifact::new(&scan, &params, args.seed, &selection),
    )?;
    io::write_json(
        &args.out_hierarchy,
        &HierarchyArtifact::new(&filtered, graph.node_ids())?,
    )?;
    eprintln!(
        "kept {} of {} proposed levels over {} scales",
        filtered.num_levels(),
        selection.scale_indices.len(),
        scan.num_scales()
    );
    Ok(())
}

fn cmd_fragment(args: &FragmentArgs) -> Result<()> {
    let (hierarchy, node_ids) = load_hierarchy(&args.hierarchy)?;
    let aligned = match &args.attributes {
        Some(path) => Some(AttributeTable::load_path(path, &args.categories)?.align(&node_ids)?),
        None => None,
    };
    let report = frag_overall(&hierarchy, aligned.as_ref())?;
    io::write_json(&args.out, &FragmentationArtifact::new(report))?;
    Ok(())
}

fn cmd_similarity(args: &SimilarityArgs) -> Result<()> {
    let (hierarchy, node_ids) = load_hierarchy(&args.hierarchy)?;
    let aligned =
        AttributeTable::load_path(&args.attributes, &args.categories)?.align(&node_ids)?;
    let reports = similarity_reports(
        &hierarchy,
        &aligned,
        args.norm_set,
        args.weighted,
        alternative(args.two_sided),
    )?;
    io::write_json(&args.out, &SimilarityArtifact::new(reports))?;
    Ok(())
}

fn cmd_correlate(args: &CorrelateArgs) -> Result<()> {
    let table = AttributeTable::load_path(&args.attributes, &args.categories)?;
    let aligned = match &args.hierarchy {
        Some(path) => {
            let (_, node_ids) = load_hierarchy(path)?;
            table.align(&node_ids)?
        }
        None => table.align(table.ids())?,
    };
    let counts = ideology_identity_counts(&aligned)?;
    let association = association_test(
        &counts,
        args.mc_samples,
        stream_seed(args.seed, "correlate/mc", &[]),
    )?;
    io::write_json(&args.out, &io::CorrelationArtifact::new(association))?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec: PlantedSpec = io::read_json(&args.spec)?;
    let (graph, truth, attrs) = generate(&spec)?;
    std::fs::create_dir_all(&args.out_dir)?;
    io::write_json(
        &args.out_dir.join(io::GRAPH_FILE),
        &GraphArtifact::new(&graph, None),
    )?;
    io::write_json(
        &args.out_dir.join(io::HIERARCHY_FILE),
        &HierarchyArtifact::new(&truth, graph.node_ids())?,
    )?;
    io::write_attributes_csv(&args.out_dir.join("attributes.csv"), &attrs)?;
    if truth.num_levels() >= 2 {
        io::write_json(
            &args.out_dir.join("ground_truth_fragmentation.json"),
            &FragmentationArtifact::new(ground_truth_frag(&spec)?),
        )?;
    }
    eprintln!(
        "planted {} nodes, {} levels, {} edges into {}",
        graph.num_nodes(),
        truth.num_levels(),
        graph.edges().len(),
        args.out_dir.display()
    );
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let summary = bundle_run(&args.dir)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.dir.join(SUMMARY_FILE));
    io::write_json(&out, &summary)?;
    eprintln!("bundled {} into {}", args.dir.display(), out.display());
    Ok(())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut config = RunConfig::load_path(&args.config)?;
    if let Ok(dir) = std::env::var("FRAGNET_OUT_DIR") {
        config.out_dir = PathBuf::from(dir);
    }
    if let Some(dir) = &args.out_dir {
        config.out_dir = dir.clone();
    }
    let summary = run_pipeline(&config)?;
    eprintln!(
        "run complete: {} levels, overall fragmentation {:.4}, reports in {}",
        summary.hierarchy.levels.len(),
        summary.fragmentation.report.overall_mean,
        config.out_dir.display()
    );
    Ok(())
}

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("FRAGNET_THREADS") {
        let threads: usize = raw
            .parse()
            .map_err(|_| Error::Config(format!("FRAGNET_THREADS must be a count, got '{raw}'")))?;
        if threads == 0 {
            return Err(Error::Config("FRAGNET_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Project(args) => cmd_project(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Fragment(args) => cmd_fragment(args),
        Command::Similarity(args) => cmd_similarity(args),
        Command::Correlate(args) => cmd_correlate(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Report(args) => cmd_report(args),
        Command::Run(args) => cmd_run(args),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
