//! Self-contained nonparametric statistics: Mann-Whitney U with exact and
//! tie-corrected normal p-values, its Noether power approximation, Pearson
//! chi-square, and Fisher exact tests (enumerated for 2x2, fixed-margin
//! Monte Carlo otherwise).

pub mod special;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::seed::stream_rng;
use crate::{Error, Result};
use special::{ln_factorial, normal_cdf, normal_quantile, normal_sf};

/// Largest combined sample size for which the U distribution is enumerated
/// exactly; larger samples use the tie-corrected normal approximation.
pub const EXACT_LIMIT: usize = 12;

/// Sidedness of the Mann-Whitney test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// First sample stochastically greater than the second.
    Greater,
    TwoSided,
}

/// How a U p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UMethod {
    Exact,
    NormalApprox,
}

/// Mann-Whitney U test outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UTest {
    /// U for the first sample: wins plus half-ties over all cross pairs.
    pub u: f64,
    pub p: f64,
    pub method: UMethod,
}

/// U statistic of `xs` against `ys`.
fn u_statistic(xs: &[f64], ys: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in xs {
        for &y in ys {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

/// Exact permutation p-value by enumerating all group assignments of the
/// combined values. U values are half-integers, so comparisons are exact.
fn exact_p(xs: &[f64], ys: &[f64], u_obs: f64, alt: Alternative) -> f64 {
    let n1 = xs.len();
    let n = n1 + ys.len();
    let combined: Vec<f64> = xs.iter().chain(ys.iter()).copied().collect();
    let mu = (n1 * ys.len()) as f64 / 2.0;
    let mut hits = 0u64;
    let mut total = 0u64;
    let mut group_a: Vec<f64> = Vec::with_capacity(n1);
    let mut group_b: Vec<f64> = Vec::with_capacity(n - n1);
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != n1 {
            continue;
        }
        group_a.clear();
        group_b.clear();
        for (ix, &v) in combined.iter().enumerate() {
            if mask & (1 << ix) != 0 {
                group_a.push(v);
            } else {
                group_b.push(v);
            }
        }
        let u = u_statistic(&group_a, &group_b);
        let hit = match alt {
            Alternative::Greater => u >= u_obs,
            Alternative::TwoSided => (u - mu).abs() >= (u_obs - mu).abs(),
        };
        if hit {
            hits += 1;
        }
        total += 1;
    }
    hits as f64 / total as f64
}

/// Normal approximation with tie correction and continuity correction.
fn normal_p(xs: &[f64], ys: &[f64], u_obs: f64, alt: Alternative) -> f64 {
    let n1 = xs.len() as f64;
    let n2 = ys.len() as f64;
    let n = n1 + n2;
    let mu = n1 * n2 / 2.0;

    // Tie correction needs the sizes of tied groups in the combined sample.
    let mut combined: Vec<f64> = xs.iter().chain(ys.iter()).copied().collect();
    combined.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut run = 1usize;
    for i in 1..=combined.len() {
        if i < combined.len() && combined[i] == combined[i - 1] {
            run += 1;
        } else {
            if run > 1 {
                let t = run as f64;
                tie_term += t * t * t - t;
            }
            run = 1;
        }
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if var <= 0.0 {
        // Complete ties: U equals its mean in every permutation.
        return 1.0;
    }
    let sigma = var.sqrt();
    match alt {
        Alternative::Greater => normal_sf((u_obs - mu - 0.5) / sigma),
        Alternative::TwoSided => (2.0 * normal_sf(((u_obs - mu).abs() - 0.5) / sigma)).min(1.0),
    }
}

/// Mann-Whitney U test of `xs` against `ys`.
///
/// Uses full enumeration when the combined size is at most `EXACT_LIMIT`
/// and the tie/continuity-corrected normal approximation otherwise. Inputs
/// must be non-empty and finite.
pub fn mann_whitney_u(xs: &[f64], ys: &[f64], alt: Alternative) -> Result<UTest> {
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::Contract(
            "mann_whitney_u requires two non-empty samples".into(),
        ));
    }
    if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Contract(
            "mann_whitney_u requires finite sample values".into(),
        ));
    }
    let u = u_statistic(xs, ys);
    let (p, method) = if xs.len() + ys.len() <= EXACT_LIMIT {
        (exact_p(xs, ys, u, alt), UMethod::Exact)
    } else {
        (normal_p(xs, ys, u, alt), UMethod::NormalApprox)
    };
    Ok(UTest { u, p, method })
}

/// Power of the one-sided U test at significance `alpha` when
/// P(X > Y) = `effect`, for sample sizes `n1` and `n2`.
///
/// Normal approximation: Phi(sqrt(12 n1 n2 / (n1 + n2 + 1)) (effect - 1/2)
/// - z_{1-alpha}). At `effect` = 1/2 the power equals `alpha`.
pub fn noether_power(n1: usize, n2: usize, effect: f64, alpha: f64) -> Result<f64> {
    if n1 == 0 || n2 == 0 {
        return Err(Error::Contract("noether_power requires n1, n2 >= 1".into()));
    }
    if !(0.5..1.0).contains(&effect) {
        return Err(Error::Contract(format!(
            "noether_power requires effect in [0.5, 1), got {effect}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Contract(format!(
            "noether_power requires alpha in (0, 1), got {alpha}"
        )));
    }
    let n1 = n1 as f64;
    let n2 = n2 as f64;
    let scale = (12.0 * n1 * n2 / (n1 + n2 + 1.0)).sqrt();
    Ok(normal_cdf(
        scale * (effect - 0.5) - normal_quantile(1.0 - alpha),
    ))
}

/// A labeled r x c table of counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self> {
        if row_labels.is_empty() || col_labels.is_empty() {
            return Err(Error::Contract(
                "contingency table must be non-empty".into(),
            ));
        }
        if counts.len() != row_labels.len() || counts.iter().any(|r| r.len() != col_labels.len()) {
            return Err(Error::Contract(
                "contingency counts must be rectangular and match the labels".into(),
            ));
        }
        Ok(ContingencyTable {
            row_labels,
            col_labels,
            counts,
        })
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.col_labels.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Removes all-zero rows and columns, returning the reduced table and
    /// the dropped labels.
    pub fn without_zero_margins(&self) -> (ContingencyTable, Vec<String>, Vec<String>) {
        let row_sums = self.row_sums();
        let col_sums = self.col_sums();
        let keep_rows: Vec<usize> = (0..row_sums.len()).filter(|&i| row_sums[i] > 0).collect();
        let keep_cols: Vec<usize> = (0..col_sums.len()).filter(|&j| col_sums[j] > 0).collect();
        let dropped_rows = (0..row_sums.len())
            .filter(|i| !keep_rows.contains(i))
            .map(|i| self.row_labels[i].clone())
            .collect();
        let dropped_cols = (0..col_sums.len())
            .filter(|j| !keep_cols.contains(j))
            .map(|j| self.col_labels[j].clone())
            .collect();
        let reduced = ContingencyTable {
            row_labels: keep_rows
                .iter()
                .map(|&i| self.row_labels[i].clone())
                .collect(),
            col_labels: keep_cols
                .iter()
                .map(|&j| self.col_labels[j].clone())
                .collect(),
            counts: keep_rows
                .iter()
                .map(|&i| keep_cols.iter().map(|&j| self.counts[i][j]).collect())
                .collect(),
        };
        (reduced, dropped_rows, dropped_cols)
    }

    /// Expected counts under independence. Requires a positive total.
    pub fn expected(&self) -> Vec<Vec<f64>> {
        let rows = self.row_sums();
        let cols = self.col_sums();
        let total = self.total() as f64;
        rows.iter()
            .map(|&r| cols.iter().map(|&c| r as f64 * c as f64 / total).collect())
            .collect()
    }
}

/// Pearson chi-square test result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p: f64,
    pub expected: Vec<Vec<f64>>,
    /// Labels removed because their margin was zero.
    pub dropped_rows: Vec<String>,
    pub dropped_cols: Vec<String>,
}

/// Pearson chi-square test of independence.
///
/// All-zero rows and columns are dropped (reported on the result); the
/// reduced table must be at least 2 x 2. The upper-tail probability comes
/// from the regularized incomplete gamma function.
pub fn chi_square(table: &ContingencyTable) -> Result<ChiSquare> {
    let (t, dropped_rows, dropped_cols) = table.without_zero_margins();
    if t.row_labels.len() < 2 || t.col_labels.len() < 2 {
        return Err(Error::Validation(format!(
            "chi-square needs at least a 2x2 table after dropping zero margins, \
             got {}x{}",
            t.row_labels.len(),
            t.col_labels.len()
        )));
    }
    let expected = t.expected();
    let mut statistic = 0.0;
    for (row, exp_row) in t.counts.iter().zip(expected.iter()) {
        for (&o, &e) in row.iter().zip(exp_row.iter()) {
            let d = o as f64 - e;
            statistic += d * d / e;
        }
    }
    let df = (t.row_labels.len() - 1) * (t.col_labels.len() - 1);
    let p = special::gamma_q(df as f64 / 2.0, statistic / 2.0);
    Ok(ChiSquare {
        statistic,
        df,
        p,
        expected,
        dropped_rows,
        dropped_cols,
    })
}

/// How a Fisher p-value was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FisherMethod {
    /// Full hypergeometric enumeration (2 x 2 tables).
    Exact,
    /// Fixed-margin Monte Carlo with the given replicate count.
    MonteCarlo { samples: usize },
}

/// Fisher exact test result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherExact {
    pub p: f64,
    pub method: FisherMethod,
    /// Binomial standard error of the Monte Carlo estimate, when sampled.
    pub standard_error: Option<f64>,
    pub dropped_rows: Vec<String>,
    pub dropped_cols: Vec<String>,
}

/// Log-probability of a table under the fixed-margin null.
fn ln_table_prob(counts: &[Vec<u64>], row_sums: &[u64], col_sums: &[u64], total: u64) -> f64 {
    let mut ln_p = -ln_factorial(total);
    for &r in row_sums {
        ln_p += ln_factorial(r);
    }
    for &c in col_sums {
        ln_p += ln_factorial(c);
    }
    for row in counts {
        for &n in row {
            ln_p -= ln_factorial(n);
        }
    }
    ln_p
}

/// Two-sided exact p for a 2x2 table: total probability of tables no more
/// likely than the observed one, under fixed margins.
fn fisher_2x2(t: &ContingencyTable) -> f64 {
    let r1 = t.counts[0][0] + t.counts[0][1];
    let r2 = t.counts[1][0] + t.counts[1][1];
    let c1 = t.counts[0][0] + t.counts[1][0];
    let n = r1 + r2;
    let ln_choose = |n: u64, k: u64| ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
    let ln_prob = |a: u64| ln_choose(r1, a) + ln_choose(r2, c1 - a) - ln_choose(n, c1);
    let a_min = c1.saturating_sub(r2);
    let a_max = r1.min(c1);
    let ln_obs = ln_prob(t.counts[0][0]);
    // Relative slack absorbs round-off in the log-space comparison.
    let gate = ln_obs + 1e-7;
    let mut p = 0.0;
    for a in a_min..=a_max {
        let lp = ln_prob(a);
        if lp <= gate {
            p += lp.exp();
        }
    }
    p.min(1.0)
}

/// Draws one value from Hypergeometric(population, successes, draws) by
/// inverse transform on the pmf recurrence.
fn sample_hypergeometric(rng: &mut impl Rng, population: u64, successes: u64, draws: u64) -> u64 {
    let k_min = draws.saturating_sub(population - successes);
    let k_max = draws.min(successes);
    if k_min == k_max {
        return k_min;
    }
    let ln_choose = |n: u64, k: u64| ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
    let ln_p0 = ln_choose(successes, k_min) + ln_choose(population - successes, draws - k_min)
        - ln_choose(population, draws);
    let mut p = ln_p0.exp();
    let mut u: f64 = rng.random();
    let mut k = k_min;
    while k < k_max {
        if u < p {
            return k;
        }
        u -= p;
        // P(k+1) / P(k) for the hypergeometric pmf. The failure slots are
        // summed before the subtraction so the u64 arithmetic stays above
        // zero for every reachable k.
        let num = (successes - k) as f64 * (draws - k) as f64;
        let den = (k + 1) as f64 * (population + k + 1 - successes - draws) as f64;
        p *= num / den;
        k += 1;
    }
    k_max
}

/// Draws a random table with the given margins (sequential conditional
/// hypergeometric fill), writing into `out`.
fn sample_fixed_margin_table(
    rng: &mut impl Rng,
    row_sums: &[u64],
    col_sums: &[u64],
    out: &mut [Vec<u64>],
) {
    let cols = col_sums.len();
    let mut col_rem: Vec<u64> = col_sums.to_vec();
    let mut total_rem: u64 = col_sums.iter().sum();
    for (i, &r) in row_sums.iter().enumerate() {
        let mut row_left = r;
        let mut pop: u64 = total_rem;
        for j in 0..cols {
            if j + 1 == cols {
                out[i][j] = row_left;
                col_rem[j] -= row_left;
                break;
            }
            let x = sample_hypergeometric(rng, pop, col_rem[j], row_left);
            out[i][j] = x;
            row_left -= x;
            pop -= col_rem[j];
            col_rem[j] -= x;
            if row_left == 0 {
                out[i][j + 1..cols].fill(0);
                break;
            }
        }
        total_rem -= r;
    }
}

/// Fisher exact test of independence.
///
/// 2 x 2 tables are enumerated exactly. Larger tables are estimated by
/// Monte Carlo over `mc_samples` tables drawn with the observed margins
/// fixed (at least 1000 samples required); the estimate is
/// (1 + hits) / (1 + samples) with its binomial standard error.
pub fn fisher_exact(table: &ContingencyTable, mc_samples: usize, seed: u64) -> Result<FisherExact> {
    let (t, dropped_rows, dropped_cols) = table.without_zero_margins();
    if t.row_labels.len() < 2 || t.col_labels.len() < 2 {
        return Err(Error::Validation(format!(
            "fisher exact needs at least a 2x2 table after dropping zero margins, \
             got {}x{}",
            t.row_labels.len(),
            t.col_labels.len()
        )));
    }
    if t.row_labels.len() == 2 && t.col_labels.len() == 2 {
        return Ok(FisherExact {
            p: fisher_2x2(&t),
            method: FisherMethod::Exact,
            standard_error: None,
            dropped_rows,
            dropped_cols,
        });
    }
    if mc_samples < 1000 {
        return Err(Error::Config(format!(
            "fisher Monte Carlo needs mc_samples >= 1000, got {mc_samples}"
        )));
    }
    let row_sums = t.row_sums();
    let col_sums = t.col_sums();
    let total = t.total();
    let ln_obs = ln_table_prob(&t.counts, &row_sums, &col_sums, total);
    let gate = ln_obs + 1e-7;

    // Replicates are split into fixed blocks with derived seeds so the count
    // is independent of thread scheduling.
    const BLOCK: usize = 1024;
    let blocks = mc_samples.div_ceil(BLOCK);
    let hits: u64 = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = stream_rng(seed, "fisher/mc-block", &[b as u64]);
            let lo = b * BLOCK;
            let hi = ((b + 1) * BLOCK).min(mc_samples);
            let mut table = vec![vec![0u64; col_sums.len()]; row_sums.len()];
            let mut local = 0u64;
            for _ in lo..hi {
                sample_fixed_margin_table(&mut rng, &row_sums, &col_sums, &mut table);
                if ln_table_prob(&table, &row_sums, &col_sums, total) <= gate {
                    local += 1;
                }
            }
            local
        })
        .sum();

    let m = mc_samples as f64;
    let p = (1.0 + hits as f64) / (1.0 + m);
    let se = (p * (1.0 - p) / m).sqrt();
    Ok(FisherExact {
        p,
        method: FisherMethod::MonteCarlo {
            samples: mc_samples,
        },
        standard_error: Some(se),
        dropped_rows,
        dropped_cols,
    })
}

/// Which association test was selected for a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChosenTest {
    ChiSquare,
    FisherExact,
    FisherMonteCarlo,
}

/// Association test outcome with the selection rationale and per-cell
/// diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub chosen: ChosenTest,
    /// Chi-square statistic when that test ran.
    pub statistic: Option<f64>,
    pub df: Option<usize>,
    pub p: f64,
    pub standard_error: Option<f64>,
    /// Fraction of expected cells below 5 (the selection criterion).
    pub low_expected_fraction: f64,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub expected: Vec<Vec<f64>>,
    /// Adjusted standardized residuals (O - E) / sqrt(E (1 - r/N)(1 - c/N)).
    pub std_residuals: Vec<Vec<f64>>,
    pub dropped_rows: Vec<String>,
    pub dropped_cols: Vec<String>,
}

/// Tests row-by-column association, choosing Pearson chi-square unless more
/// than 20% of expected cells fall below 5, in which case the Fisher exact
/// test is used (enumerated for 2x2, Monte Carlo otherwise).
pub fn association_test(
    table: &ContingencyTable,
    mc_samples: usize,
    seed: u64,
) -> Result<Association> {
    let (t, dropped_rows, dropped_cols) = table.without_zero_margins();
    if t.row_labels.len() < 2 || t.col_labels.len() < 2 {
        return Err(Error::Validation(format!(
            "association test needs at least a 2x2 table after dropping zero margins, \
             got {}x{}",
            t.row_labels.len(),
            t.col_labels.len()
        )));
    }
    let expected = t.expected();
    let cells = (t.row_labels.len() * t.col_labels.len()) as f64;
    let low = expected.iter().flatten().filter(|&&e| e < 5.0).count() as f64;
    let low_fraction = low / cells;

    let row_sums = t.row_sums();
    let col_sums = t.col_sums();
    let total = t.total() as f64;
    let std_residuals: Vec<Vec<f64>> = t
        .counts
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, &o)| {
                    let e = expected[i][j];
                    let denom = (e
                        * (1.0 - row_sums[i] as f64 / total)
                        * (1.0 - col_sums[j] as f64 / total))
                        .sqrt();
                    (o as f64 - e) / denom
                })
                .collect()
        })
        .collect();

    let mut out = Association {
        chosen: ChosenTest::ChiSquare,
        statistic: None,
        df: None,
        p: f64::NAN,
        standard_error: None,
        low_expected_fraction: low_fraction,
        row_labels: t.row_labels.clone(),
        col_labels: t.col_labels.clone(),
        counts: t.counts.clone(),
        expected,
        std_residuals,
        dropped_rows,
        dropped_cols,
    };
    if low_fraction > 0.2 {
        let fisher = fisher_exact(&t, mc_samples, seed)?;
        out.chosen = match fisher.method {
            FisherMethod::Exact => ChosenTest::FisherExact,
            FisherMethod::MonteCarlo { .. } => ChosenTest::FisherMonteCarlo,
        };
        out.p = fisher.p;
        out.standard_error = fisher.standard_error;
    } else {
        let chi = chi_square(&t)?;
        out.statistic = Some(chi.statistic);
        out.df = Some(chi.df);
        out.p = chi.p;
    }
    Ok(out)
}
