//! Log-spaced scale scan and robust-scale selection.
//!
//! The scan runs the optimizer `n_tries` times per scale and records the
//! best partition plus how much the ensemble disagrees (mean pairwise NVI).
//! Scales where the ensemble agrees and the winning partition persists
//! across a stretch of the grid are taken as the levels of a multilevel
//! partition.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{nvi, optimize, Partition, QualityModel};
use crate::graph::WeightedGraph;
use crate::hierarchy::MultilevelPartition;
use crate::seed::{stream_rng, stream_seed};
use crate::{Error, Result};

/// Pair budget for the ensemble disagreement estimate.
pub const MAX_NVI_PAIRS: usize = 200;

/// How the sampled pairwise NVI values are reduced to one number per scale.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NviAggregate {
    MeanPairwise,
    MedianPairwise,
}

/// Scan grid and ensemble size. Scale bounds are log10 of the smallest and
/// largest scale; the grid is log-uniform between them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanParams {
    pub min_scale: f64,
    pub max_scale: f64,
    pub n_scale: usize,
    pub n_tries: usize,
    #[serde(default = "default_aggregate")]
    pub nvi_aggregate: NviAggregate,
    /// Keep the full per-scale ensembles in the result. Turn off to bound
    /// memory on long scans; the NVI summary is computed either way.
    #[serde(default = "default_true")]
    pub keep_ensembles: bool,
}

fn default_aggregate() -> NviAggregate {
    NviAggregate::MeanPairwise
}

fn default_true() -> bool {
    true
}

impl Default for ScanParams {
    fn default() -> Self {
        ScanParams {
            min_scale: -3.0,
            max_scale: 3.0,
            n_scale: 1000,
            n_tries: 100,
            nvi_aggregate: NviAggregate::MeanPairwise,
            keep_ensembles: true,
        }
    }
}

impl ScanParams {
    pub fn new(min_scale: f64, max_scale: f64, n_scale: usize, n_tries: usize) -> Result<Self> {
        let params = ScanParams {
            min_scale,
            max_scale,
            n_scale,
            n_tries,
            ..ScanParams::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.min_scale.is_finite() || !self.max_scale.is_finite() {
            return Err(Error::Config("scale bounds must be finite".into()));
        }
        if self.min_scale >= self.max_scale {
            return Err(Error::Config(format!(
                "min_scale {} must be below max_scale {}",
                self.min_scale, self.max_scale
            )));
        }
        if self.n_scale < 2 {
            return Err(Error::Config("n_scale must be at least 2".into()));
        }
        if self.n_tries < 2 {
            return Err(Error::Config("n_tries must be at least 2".into()));
        }
        Ok(())
    }

    /// The scanned scales: n_scale log-spaced values, endpoints included.
    pub fn scales(&self) -> Vec<f64> {
        let steps = (self.n_scale - 1) as f64;
        (0..self.n_scale)
            .map(|i| {
                let frac = i as f64 / steps;
                let log_t = self.min_scale + frac * (self.max_scale - self.min_scale);
                10f64.powf(log_t)
            })
            .collect()
    }
}

/// One scanned scale: the best partition over the ensemble and the
/// ensemble's internal disagreement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleRecord {
    pub scale: f64,
    pub best: Partition,
    pub best_quality: f64,
    pub ensemble: Vec<Partition>,
    pub ensemble_nvi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScaleScanResult {
    pub records: Vec<ScaleRecord>,
}

impl ScaleScanResult {
    pub fn num_scales(&self) -> usize {
        self.records.len()
    }

    pub fn scales(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.scale).collect()
    }

    /// Index of the highest-quality record; earlier index wins ties.
    pub fn best_overall(&self) -> usize {
        let mut best = 0;
        for i in 1..self.records.len() {
            if self.records[i].best_quality > self.records[best].best_quality {
                best = i;
            }
        }
        best
    }
}

/// Basin detection settings for `select_robust_scales`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectParams {
    /// Width of the centered moving average applied to the NVI curve.
    pub window: usize,
    /// Minimum basin width, in grid points, for a minimum to count.
    pub min_basin: usize,
    /// A basin is the contiguous run of scales whose best partition stays
    /// within this NVI distance of the minimum's partition.
    pub epsilon: f64,
}

impl Default for SelectParams {
    fn default() -> Self {
        SelectParams {
            window: 5,
            min_basin: 3,
            epsilon: 0.02,
        }
    }
}

impl SelectParams {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.min_basin == 0 {
            return Err(Error::Config(
                "window and min_basin must be positive".into(),
            ));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::Config(
                "epsilon must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// The levels picked from a scan, coarse to fine, with the grid indices
/// they came from.
#[derive(Debug, Clone)]
pub struct ScaleSelection {
    pub levels: MultilevelPartition,
    pub scale_indices: Vec<usize>,
}

fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    for a in 0..n {
        let row = n - 1 - a;
        if k < row {
            return (a, a + 1 + k);
        }
        k -= row;
    }
    unreachable!("pair rank out of range")
}

fn aggregate_nvi(mut values: Vec<f64>, how: NviAggregate) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    match how {
        NviAggregate::MeanPairwise => values.iter().sum::<f64>() / values.len() as f64,
        NviAggregate::MedianPairwise => {
            values.sort_by(|a, b| a.total_cmp(b));
            let mid = values.len() / 2;
            if values.len() % 2 == 1 {
                values[mid]
            } else {
                0.5 * (values[mid - 1] + values[mid])
            }
        }
    }
}

/// Runs the optimizer ensemble over a log-spaced scale grid.
///
/// Tries are seeded from `seed` by (scale index, try index), so a fixed
/// seed gives a bit-identical result, serial or parallel.
pub fn scan_scales(g: &WeightedGraph, params: &ScanParams, seed: u64) -> Result<ScaleScanResult> {
    params.validate()?;
    let mut records = Vec::with_capacity(params.n_scale);
    for (scale_ix, scale) in params.scales().into_iter().enumerate() {
        let model = QualityModel::new(g, scale)?;
        let ensemble: Vec<Partition> = (0..params.n_tries)
            .into_par_iter()
            .map(|try_ix| {
                let s = stream_seed(seed, "scan/try", &[scale_ix as u64, try_ix as u64]);
                optimize(&model, s)
            })
            .collect();
        let qualities: Vec<f64> = ensemble
            .par_iter()
            .map(|p| {
                model
                    .quality(p)
                    .expect("ensemble partition covers the graph")
            })
            .collect();
        let mut best_ix = 0;
        for j in 1..qualities.len() {
            if qualities[j] > qualities[best_ix] {
                best_ix = j;
            }
        }

        let total_pairs = params.n_tries * (params.n_tries - 1) / 2;
        let pair_ranks: Vec<usize> = if total_pairs <= MAX_NVI_PAIRS {
            (0..total_pairs).collect()
        } else {
            let mut rng = stream_rng(seed, "scan/nvi-pairs", &[scale_ix as u64]);
            let mut picks =
                rand::seq::index::sample(&mut rng, total_pairs, MAX_NVI_PAIRS).into_vec();
            picks.sort_unstable();
            picks
        };
        let values: Vec<f64> = pair_ranks
            .par_iter()
            .map(|&k| {
                let (a, b) = unrank_pair(k, params.n_tries);
                nvi(&ensemble[a], &ensemble[b]).expect("ensemble partitions share nodes")
            })
            .collect();
        let ensemble_nvi = aggregate_nvi(values, params.nvi_aggregate);

        records.push(ScaleRecord {
            scale,
            best: ensemble[best_ix].clone(),
            best_quality: qualities[best_ix],
            ensemble: if params.keep_ensembles {
                ensemble
            } else {
                Vec::new()
            },
            ensemble_nvi,
        });
    }
    Ok(ScaleScanResult { records })
}

fn smooth(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    let lo = (window - 1) / 2;
    let hi = window / 2;
    (0..n)
        .map(|i| {
            let a = i.saturating_sub(lo);
            let b = (i + hi).min(n - 1);
            values[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
        })
        .collect()
}

/// Contiguous run around `ix` whose best partition stays within `eps`
/// NVI of the best partition at `ix`.
fn basin(records: &[ScaleRecord], ix: usize, eps: f64) -> (usize, usize) {
    let anchor = &records[ix].best;
    let close =
        |j: usize| nvi(&records[j].best, anchor).expect("scan partitions share nodes") <= eps;
    let mut lo = ix;
    while lo > 0 && close(lo - 1) {
        lo -= 1;
    }
    let mut hi = ix;
    while hi + 1 < records.len() && close(hi + 1) {
        hi += 1;
    }
    (lo, hi)
}

/// Picks one representative partition per basin of low ensemble NVI.
///
/// The NVI curve is smoothed with a centered moving average; every local
/// minimum whose winning partition persists, within `epsilon` NVI, across
/// at least `min_basin` consecutive grid points proposes that partition.
/// The persistence gate is what discards one-off partitions that appear
/// only in the narrow crossover between two stable regimes. Levels come
/// out coarse to fine (increasing community count), with groupings that
/// are identical up to relabeling reported once; that collapse also
/// absorbs plateaus where a whole run of grid points ties for the minimum.
/// When no basin qualifies the single best-quality partition of the scan
/// is returned, flagged as a fallback.
pub fn select_robust_scales(
    scan: &ScaleScanResult,
    params: &SelectParams,
) -> Result<ScaleSelection> {
    params.validate()?;
    if scan.records.is_empty() {
        return Err(Error::Contract(
            "scale selection needs a non-empty scan".into(),
        ));
    }
    let raw: Vec<f64> = scan.records.iter().map(|r| r.ensemble_nvi).collect();
    let curve = smooth(&raw, params.window);
    let n = curve.len();

    let reps: Vec<usize> = (0..n)
        .filter(|&i| {
            (i == 0 || curve[i] <= curve[i - 1]) && (i + 1 == n || curve[i] <= curve[i + 1])
        })
        .filter(|&i| {
            let (lo, hi) = basin(&scan.records, i, params.epsilon);
            hi - lo + 1 >= params.min_basin
        })
        .collect();

    let (mut chosen, fallback) = if reps.is_empty() {
        (vec![scan.best_overall()], true)
    } else {
        (reps, false)
    };

    // Coarse to fine: fewer communities first, larger scale first on ties.
    chosen.sort_by(|&a, &b| {
        let ca = scan.records[a].best.num_communities();
        let cb = scan.records[b].best.num_communities();
        ca.cmp(&cb)
            .then_with(|| scan.records[b].scale.total_cmp(&scan.records[a].scale))
    });
    let mut kept: Vec<usize> = Vec::new();
    for ix in chosen {
        let p = &scan.records[ix].best;
        if kept.iter().all(|&k| !scan.records[k].best.same_grouping(p)) {
            kept.push(ix);
        }
    }

    let levels: Vec<(Partition, Option<f64>)> = kept
        .iter()
        .map(|&ix| (scan.records[ix].best.clone(), Some(scan.records[ix].scale)))
        .collect();
    Ok(ScaleSelection {
        levels: MultilevelPartition::new(levels, fallback)?,
        scale_indices: kept,
    })
}
