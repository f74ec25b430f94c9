//! Uniform and cluster-balanced subsampling for silhouette estimation, and
//! the Monte Carlo study comparing the two.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Labeling};
use crate::error::{Error, Result};
use crate::silhouette::{full_report, Aggregation, ReportOptions, SilhouetteReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Uniform,
    Balanced,
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Uniform => "uniform",
            Strategy::Balanced => "balanced",
        })
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "uniform" => Ok(Strategy::Uniform),
            "balanced" => Ok(Strategy::Balanced),
            other => Err(format!("unknown strategy '{other}' (expected uniform|balanced)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub strategy: Strategy,
    pub size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    /// Selected rows, ascending.
    pub indices: Vec<usize>,
    /// Rows drawn from each cluster of the full labeling.
    pub counts: Vec<usize>,
    /// `None` when fewer than two clusters made it into the sample.
    pub report: Option<SilhouetteReport>,
}

impl SampleResult {
    pub fn is_defined(&self) -> bool {
        self.report.is_some()
    }

    pub fn score(&self, aggregation: Aggregation) -> Option<f64> {
        self.report.as_ref().map(|r| r.score(aggregation))
    }
}

fn check_size(size: usize, n: usize) -> Result<()> {
    if size < 2 || size > n {
        return Err(Error::InvalidSampleSize { size, n });
    }
    Ok(())
}

/// Scores the rows `indices`. Clusters with no drawn member disappear from
/// the sub-labeling.
fn score_subset(
    data: &Dataset,
    labels: &Labeling,
    mut indices: Vec<usize>,
    options: ReportOptions,
) -> Result<SampleResult> {
    indices.sort_unstable();
    let mut counts = vec![0; labels.k()];
    let raw: Vec<usize> = indices
        .iter()
        .map(|&i| {
            counts[labels.get(i)] += 1;
            labels.get(i)
        })
        .collect();
    let sub_labels = Labeling::canonicalize(&raw);
    let report = if sub_labels.k() < 2 {
        None
    } else {
        Some(full_report(&data.subset(&indices)?, &sub_labels, options)?)
    };
    Ok(SampleResult {
        indices,
        counts,
        report,
    })
}

/// Draws `size` rows uniformly without replacement.
pub fn uniform_sample(
    data: &Dataset,
    labels: &Labeling,
    spec: &SampleSpec,
    options: ReportOptions,
) -> Result<SampleResult> {
    labels.check_len(data.len())?;
    check_size(spec.size, data.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let indices = index::sample(&mut rng, data.len(), spec.size).into_vec();
    score_subset(data, labels, indices, options)
}

/// Per-cluster draw counts for a balanced sample of `size` rows.
///
/// Every cluster gets `size / k` rows, or all of its rows if it has fewer.
/// Leftover budget is handed out one row at a time to the cluster with the
/// most rows still undrawn, ties going to the smaller cluster id.
pub fn balanced_quotas(sizes: &[usize], size: usize) -> Vec<usize> {
    let k = sizes.len();
    if k == 0 {
        return Vec::new();
    }
    let quota = size / k;
    let mut take: Vec<usize> = sizes.iter().map(|&s| s.min(quota)).collect();
    let mut left = size.saturating_sub(take.iter().sum());
    while left > 0 {
        let mut best: Option<usize> = None;
        for c in 0..k {
            let spare = sizes[c] - take[c];
            if spare > 0 && best.is_none_or(|b| spare > sizes[b] - take[b]) {
                best = Some(c);
            }
        }
        let Some(c) = best else { break };
        take[c] += 1;
        left -= 1;
    }
    take
}

/// Draws an equal share of rows from every cluster, see [`balanced_quotas`].
/// Within a cluster rows are drawn uniformly without replacement.
pub fn balanced_sample(
    data: &Dataset,
    labels: &Labeling,
    spec: &SampleSpec,
    options: ReportOptions,
) -> Result<SampleResult> {
    labels.check_len(data.len())?;
    check_size(spec.size, data.len())?;
    let members = labels.members();
    let quotas = balanced_quotas(&labels.sizes(), spec.size);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut indices = Vec::with_capacity(spec.size);
    for (rows, &q) in members.iter().zip(&quotas) {
        indices.extend(index::sample(&mut rng, rows.len(), q).into_iter().map(|j| rows[j]));
    }
    score_subset(data, labels, indices, options)
}

pub fn sample(data: &Dataset, labels: &Labeling, spec: &SampleSpec, options: ReportOptions) -> Result<SampleResult> {
    match spec.strategy {
        Strategy::Uniform => uniform_sample(data, labels, spec, options),
        Strategy::Balanced => balanced_sample(data, labels, spec, options),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub size: usize,
    pub strategy: Strategy,
    pub run: usize,
    pub score: Option<f64>,
}

/// Distribution of the defined scores of one `(size, strategy)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub size: usize,
    pub strategy: Strategy,
    pub defined: usize,
    pub undefined: usize,
    pub median: Option<f64>,
    pub q1: Option<f64>,
    pub q3: Option<f64>,
    pub whisker_low: Option<f64>,
    pub whisker_high: Option<f64>,
}

impl SummaryRow {
    pub fn whisker_range(&self) -> Option<f64> {
        Some(self.whisker_high? - self.whisker_low?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

impl StudyResult {
    pub fn cell(&self, size: usize, strategy: Strategy) -> Option<&SummaryRow> {
        self.summary.iter().find(|r| r.size == size && r.strategy == strategy)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub sizes: Vec<usize>,
    pub runs: usize,
    pub strategies: Vec<Strategy>,
    pub aggregation: Aggregation,
    pub seed: u64,
}

/// Linear-interpolation quantile of sorted data (the "type 7" rule).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median, quartiles and Tukey whiskers (most extreme points within 1.5 IQR
/// of the quartiles).
pub fn tukey_summary(values: &[f64]) -> Option<(f64, f64, f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let low = sorted
        .iter()
        .copied()
        .find(|&v| v >= q1 - 1.5 * iqr)
        .unwrap_or(sorted[0]);
    let high = sorted
        .iter()
        .rev()
        .copied()
        .find(|&v| v <= q3 + 1.5 * iqr)
        .unwrap_or(sorted[sorted.len() - 1]);
    Some((median, q1, q3, low, high))
}

fn summarize(size: usize, strategy: Strategy, scores: &[Option<f64>]) -> SummaryRow {
    let defined: Vec<f64> = scores.iter().flatten().copied().collect();
    let stats = tukey_summary(&defined);
    SummaryRow {
        size,
        strategy,
        defined: defined.len(),
        undefined: scores.len() - defined.len(),
        median: stats.map(|s| s.0),
        q1: stats.map(|s| s.1),
        q3: stats.map(|s| s.2),
        whisker_low: stats.map(|s| s.3),
        whisker_high: stats.map(|s| s.4),
    }
}

/// Repeated subsampling per `(size, strategy)`. Run `r` uses seed
/// `config.seed + r`, so the outcome does not depend on scheduling. Runs whose
/// sample holds a single cluster are recorded as undefined and left out of
/// the summary statistics.
pub fn monte_carlo_study(
    data: &Dataset,
    labels: &Labeling,
    config: &StudyConfig,
    options: ReportOptions,
) -> Result<StudyResult> {
    if config.runs == 0 {
        return Err(Error::InvalidConfig("runs must be at least 1".into()));
    }
    let cells: Vec<(usize, Strategy, usize)> = config
        .sizes
        .iter()
        .flat_map(|&size| {
            config
                .strategies
                .iter()
                .flat_map(move |&strategy| (0..config.runs).map(move |run| (size, strategy, run)))
        })
        .collect();
    let runs: Vec<RunRecord> = cells
        .par_iter()
        .map(|&(size, strategy, run)| {
            let spec = SampleSpec {
                strategy,
                size,
                seed: config.seed.wrapping_add(run as u64),
            };
            let result = sample(data, labels, &spec, options)?;
            Ok(RunRecord {
                size,
                strategy,
                run,
                score: result.score(config.aggregation),
            })
        })
        .collect::<Result<_>>()?;
    let summary = runs
        .chunks(config.runs)
        .map(|chunk| {
            let scores: Vec<Option<f64>> = chunk.iter().map(|r| r.score).collect();
            summarize(chunk[0].size, chunk[0].strategy, &scores)
        })
        .collect();
    Ok(StudyResult { runs, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(sizes: &[usize]) -> (Dataset, Labeling) {
        let mut xs = Vec::new();
        let mut raw = Vec::new();
        for (c, &s) in sizes.iter().enumerate() {
            for j in 0..s {
                xs.push(c as f64 * 100.0 + j as f64 * 0.01);
                raw.push(c);
            }
        }
        let n = xs.len();
        (Dataset::new(xs, n, 1).unwrap(), Labeling::canonicalize(&raw))
    }

    #[test]
    fn quotas_exact_division() {
        assert_eq!(balanced_quotas(&[10, 20, 30, 40], 40), vec![10, 10, 10, 10]);
    }

    #[test]
    fn quotas_redistribute_from_small_cluster() {
        assert_eq!(balanced_quotas(&[5, 100, 100], 30), vec![5, 13, 12]);
    }

    #[test]
    fn quotas_exhaust_everything() {
        assert_eq!(balanced_quotas(&[1, 2, 3], 6), vec![1, 2, 3]);
        assert_eq!(balanced_quotas(&[4, 4], 3), vec![2, 1]);
    }

    #[test]
    fn balanced_draws_match_quotas() {
        let (data, labels) = toy(&[5, 100, 100]);
        let spec = SampleSpec {
            strategy: Strategy::Balanced,
            size: 30,
            seed: 3,
        };
        let r = balanced_sample(&data, &labels, &spec, ReportOptions::default()).unwrap();
        assert_eq!(r.counts, vec![5, 13, 12]);
        assert_eq!(r.indices.len(), 30);
        assert!(r.is_defined());
    }

    #[test]
    fn full_size_sample_matches_full_report() {
        let (data, labels) = toy(&[6, 9, 4]);
        let full = full_report(&data, &labels, ReportOptions::default()).unwrap();
        for strategy in [Strategy::Uniform, Strategy::Balanced] {
            let spec = SampleSpec {
                strategy,
                size: data.len(),
                seed: 11,
            };
            let r = sample(&data, &labels, &spec, ReportOptions::default()).unwrap();
            assert_eq!(r.report.as_ref(), Some(&full));
        }
    }

    #[test]
    fn sample_size_bounds() {
        let (data, labels) = toy(&[3, 3]);
        for size in [0, 1, 7] {
            let spec = SampleSpec {
                strategy: Strategy::Uniform,
                size,
                seed: 0,
            };
            assert!(matches!(
                uniform_sample(&data, &labels, &spec, ReportOptions::default()),
                Err(Error::InvalidSampleSize { .. })
            ));
        }
    }

    #[test]
    fn uniform_can_miss_every_minor_cluster() {
        // one huge cluster and one of size 2: some seed draws only the big one
        let (data, labels) = toy(&[500, 2]);
        let undefined = (0..100)
            .filter(|&seed| {
                let spec = SampleSpec {
                    strategy: Strategy::Uniform,
                    size: 5,
                    seed,
                };
                !uniform_sample(&data, &labels, &spec, ReportOptions::default())
                    .unwrap()
                    .is_defined()
            })
            .count();
        assert!(undefined > 0);
    }

    #[test]
    fn tukey_whiskers() {
        let v = [1.0, 2.0, 3.0, 4.0, 100.0];
        let (median, q1, q3, low, high) = tukey_summary(&v).unwrap();
        assert_eq!((median, q1, q3), (3.0, 2.0, 4.0));
        assert_eq!(low, 1.0);
        // 100 lies beyond q3 + 1.5 * 2
        assert_eq!(high, 4.0);
        assert!(tukey_summary(&[]).is_none());
    }

    #[test]
    fn study_full_size_has_no_spread() {
        let (data, labels) = toy(&[6, 9, 4]);
        let full = full_report(&data, &labels, ReportOptions::default()).unwrap();
        let config = StudyConfig {
            sizes: vec![data.len()],
            runs: 5,
            strategies: vec![Strategy::Uniform, Strategy::Balanced],
            aggregation: Aggregation::Macro,
            seed: 1,
        };
        let study = monte_carlo_study(&data, &labels, &config, ReportOptions::default()).unwrap();
        assert_eq!(study.runs.len(), 10);
        for row in &study.summary {
            assert_eq!(row.median, Some(full.macro_avg));
            assert_eq!(row.whisker_range(), Some(0.0));
            assert_eq!(row.undefined, 0);
        }
    }
}
