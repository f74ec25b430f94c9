//! Number-of-clusters estimation: cluster for every k in a range, score each
//! solution with both aggregations and pick the maximum.

use serde::{Deserialize, Serialize};

use crate::clustering::{global_kmeanspp, KMeansConfig, KMeansResult};
use crate::data::{pairwise_distances, Dataset, Labeling, StreamingDistances};
use crate::error::{Error, Result};
use crate::sampling::{sample, SampleSpec};
use crate::silhouette::{
    report_from_distances, Aggregation, DistanceMode, ReportOptions, SilhouetteReport, MATRIX_LIMIT,
};

/// How each candidate solution is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum Scoring {
    /// Exact silhouette over all points.
    Full,
    /// Silhouette of a subsample drawn from each solution's own labeling.
    Sampled(SampleSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub k_min: usize,
    pub k_max: usize,
    pub kmeans: KMeansConfig,
    pub scoring: Scoring,
    pub report: ReportOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub k: usize,
    pub micro: f64,
    #[serde(rename = "macro")]
    pub macro_avg: f64,
    pub sse: f64,
}

impl SweepRow {
    pub fn score(&self, aggregation: Aggregation) -> f64 {
        match aggregation {
            Aggregation::Micro => self.micro,
            Aggregation::Macro => self.macro_avg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub argmax_micro: usize,
    pub argmax_macro: usize,
    pub k_range: (usize, usize),
}

impl SweepResult {
    pub fn from_rows(rows: Vec<SweepRow>) -> Result<Self> {
        let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
            return Err(Error::InvalidConfig("empty sweep".into()));
        };
        let k_range = (first.k, last.k);
        let mut out = Self {
            rows,
            argmax_micro: 0,
            argmax_macro: 0,
            k_range,
        };
        out.argmax_micro = estimate_k(&out, Aggregation::Micro);
        out.argmax_macro = estimate_k(&out, Aggregation::Macro);
        Ok(out)
    }

    pub fn row(&self, k: usize) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    pub fn max_score(&self, aggregation: Aggregation) -> f64 {
        self.rows
            .iter()
            .map(|r| r.score(aggregation))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Smallest k attaining the maximum of the chosen column. NaN scores never win.
pub fn estimate_k(sweep: &SweepResult, aggregation: Aggregation) -> usize {
    let mut best_k = sweep.rows.first().map_or(0, |r| r.k);
    let mut best = f64::NEG_INFINITY;
    for row in &sweep.rows {
        let s = row.score(aggregation);
        if s > best {
            best = s;
            best_k = row.k;
        }
    }
    best_k
}

fn score_solution(
    data: &Dataset,
    solution: &KMeansResult,
    config: &SweepConfig,
    matrix: Option<&crate::data::DistanceMatrix>,
) -> Result<SilhouetteReport> {
    let labels: &Labeling = &solution.labeling;
    match config.scoring {
        Scoring::Full => match matrix {
            Some(m) => report_from_distances(labels, m),
            None => report_from_distances(labels, &StreamingDistances::new(data, config.report.metric)),
        },
        Scoring::Sampled(spec) => {
            let drawn = sample(data, labels, &spec, config.report)?;
            drawn.report.ok_or(Error::SilhouetteUndefined { k: 1 })
        }
    }
}

/// Clusters with global k-means++ up to `k_max` and scores every
/// `k in k_min..=k_max`.
pub fn sweep(data: &Dataset, config: &SweepConfig) -> Result<SweepResult> {
    let (k_min, k_max) = (config.k_min, config.k_max);
    if k_min < 2 || k_min > k_max || k_max + 1 > data.len() {
        return Err(Error::InvalidKRange {
            k_min,
            k_max,
            n: data.len(),
        });
    }
    let solutions = global_kmeanspp(data, k_max, &config.kmeans)?;
    let use_matrix = matches!(config.scoring, Scoring::Full)
        && match config.report.distances {
            DistanceMode::Matrix => true,
            DistanceMode::Streaming => false,
            DistanceMode::Auto => data.len() <= MATRIX_LIMIT,
        };
    let matrix = use_matrix.then(|| pairwise_distances(data, config.report.metric));
    let rows = (k_min..=k_max)
        .map(|k| {
            let solution = &solutions[k - 1];
            let report = score_solution(data, solution, config, matrix.as_ref())?;
            Ok(SweepRow {
                k,
                micro: report.micro,
                macro_avg: report.macro_avg,
                sse: solution.sse,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SweepResult::from_rows(rows)
}
