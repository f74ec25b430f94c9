//! Per-point silhouette scores and their micro/macro aggregation.
//!
//! For point `i` in cluster `I`:
//!
//! * `a(i)` is the mean distance to the other members of `I`,
//! * `b(i)` is the smallest mean distance to the members of any other cluster,
//! * `s(i) = (b - a) / max(a, b)`.
//!
//! Members of singleton clusters score 0, as does the degenerate `a = b = 0`.
//! The micro average weighs every point equally; the macro average first
//! averages within each cluster and then weighs every cluster equally.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{pairwise_distances, Dataset, DistanceSource, Labeling, Metric, StreamingDistances};
use crate::error::{Error, Result};

/// How per-point scores are folded into one number.
///
/// Only means are provided. Other statistics over the cluster means
/// (min, median, max) would slot in here as extra variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    Micro,
    Macro,
}

impl std::fmt::Display for Aggregation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Aggregation::Micro => "micro",
            Aggregation::Macro => "macro",
        })
    }
}

impl std::str::FromStr for Aggregation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "micro" => Ok(Aggregation::Micro),
            "macro" => Ok(Aggregation::Macro),
            other => Err(format!("unknown aggregation '{other}' (expected micro|macro)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    pub micro: f64,
    #[serde(rename = "macro")]
    pub macro_avg: f64,
    pub per_cluster: Vec<f64>,
    pub per_point: Vec<f64>,
    pub singleton_count: usize,
}

impl SilhouetteReport {
    /// Aggregates already computed per-point scores.
    pub fn from_scores(labels: &Labeling, per_point: Vec<f64>) -> Result<Self> {
        require_two_clusters(labels)?;
        labels.check_len(per_point.len())?;
        let sizes = labels.sizes();
        let mut sums = vec![0.0; labels.k()];
        for (&c, &s) in labels.assignments().iter().zip(&per_point) {
            sums[c] += s;
        }
        let per_cluster: Vec<f64> = sums.iter().zip(&sizes).map(|(&sum, &size)| sum / size as f64).collect();
        let singleton_count = sizes.iter().filter(|&&s| s == 1).count();
        Ok(Self {
            micro: micro_average(&per_point),
            macro_avg: macro_average(&per_cluster),
            per_cluster,
            per_point,
            singleton_count,
        })
    }

    pub fn score(&self, aggregation: Aggregation) -> f64 {
        match aggregation {
            Aggregation::Micro => self.micro,
            Aggregation::Macro => self.macro_avg,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// Matrix when it fits under [`MATRIX_LIMIT`] rows, streaming otherwise.
    #[default]
    Auto,
    Matrix,
    Streaming,
}

/// Largest `N` for which `DistanceMode::Auto` materialises the matrix (~128 MiB).
pub const MATRIX_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub metric: Metric,
    pub distances: DistanceMode,
}

fn require_two_clusters(labels: &Labeling) -> Result<()> {
    if labels.k() < 2 {
        return Err(Error::SilhouetteUndefined { k: labels.k() });
    }
    Ok(())
}

fn check_index(i: usize, labels: &Labeling) -> Result<()> {
    if i >= labels.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: labels.len(),
        });
    }
    Ok(())
}

/// Sum of distances from one row to each cluster, in index order.
fn cluster_sums(row: &[f64], labels: &[usize], sums: &mut [f64]) {
    sums.iter_mut().for_each(|s| *s = 0.0);
    for (&d, &c) in row.iter().zip(labels) {
        sums[c] += d;
    }
}

/// `(a, b, nearest)` for one point given its per-cluster distance sums.
/// `a` is `None` for singleton clusters. Needs `k >= 2`.
fn components(own: usize, sums: &[f64], sizes: &[usize]) -> (Option<f64>, f64, usize) {
    let a = (sizes[own] > 1).then(|| sums[own] / (sizes[own] - 1) as f64);
    let mut best = f64::INFINITY;
    let mut nearest = usize::MAX;
    for (c, (&sum, &size)) in sums.iter().zip(sizes).enumerate() {
        if c == own {
            continue;
        }
        let mean = sum / size as f64;
        // strict comparison keeps the smallest id on ties
        if mean < best {
            best = mean;
            nearest = c;
        }
    }
    (a, best, nearest)
}

fn score(a: Option<f64>, b: f64) -> f64 {
    match a {
        None => 0.0,
        Some(a) => {
            let denom = a.max(b);
            if denom == 0.0 {
                0.0
            } else {
                (b - a) / denom
            }
        }
    }
}

fn point_sums<D: DistanceSource + ?Sized>(i: usize, labels: &Labeling, dist: &D) -> Result<Vec<f64>> {
    check_index(i, labels)?;
    labels.check_len(dist.len())?;
    let mut row = vec![0.0; dist.len()];
    dist.fill_row(i, &mut row);
    let mut sums = vec![0.0; labels.k()];
    cluster_sums(&row, labels.assignments(), &mut sums);
    Ok(sums)
}

/// Mean distance from `i` to the rest of its cluster; `None` when the
/// cluster is a singleton.
pub fn inner_distance<D: DistanceSource + ?Sized>(i: usize, labels: &Labeling, dist: &D) -> Result<Option<f64>> {
    let sums = point_sums(i, labels, dist)?;
    let own = labels.get(i);
    let size = labels.sizes()[own];
    Ok((size > 1).then(|| sums[own] / (size - 1) as f64))
}

/// Smallest mean distance from `i` to a foreign cluster, with that cluster's id.
/// Ties go to the smaller id.
pub fn outer_distance<D: DistanceSource + ?Sized>(i: usize, labels: &Labeling, dist: &D) -> Result<(f64, usize)> {
    require_two_clusters(labels)?;
    let sums = point_sums(i, labels, dist)?;
    let (_, b, nearest) = components(labels.get(i), &sums, &labels.sizes());
    Ok((b, nearest))
}

pub fn point_score<D: DistanceSource + ?Sized>(i: usize, labels: &Labeling, dist: &D) -> Result<f64> {
    require_two_clusters(labels)?;
    let sums = point_sums(i, labels, dist)?;
    let (a, b, _) = components(labels.get(i), &sums, &labels.sizes());
    Ok(score(a, b))
}

/// Silhouette of every point. Points are scored in parallel, each from its own
/// distance row with a fixed summation order.
pub fn per_point_scores<D: DistanceSource + ?Sized>(labels: &Labeling, dist: &D) -> Result<Vec<f64>> {
    require_two_clusters(labels)?;
    labels.check_len(dist.len())?;
    let n = labels.len();
    let k = labels.k();
    let sizes = labels.sizes();
    let assignments = labels.assignments();
    Ok((0..n)
        .into_par_iter()
        .map_init(
            || (vec![0.0; n], vec![0.0; k]),
            |(row, sums), i| {
                dist.fill_row(i, row);
                cluster_sums(row, assignments, sums);
                let (a, b, _) = components(assignments[i], sums, &sizes);
                score(a, b)
            },
        )
        .collect())
}

/// Point-level mean.
pub fn micro_average(per_point: &[f64]) -> f64 {
    per_point.iter().sum::<f64>() / per_point.len() as f64
}

/// Mean score of the members of cluster `c`.
pub fn cluster_mean(c: usize, labels: &Labeling, per_point: &[f64]) -> Result<f64> {
    labels.check_len(per_point.len())?;
    if c >= labels.k() {
        return Err(Error::UnknownCluster(c));
    }
    let (sum, count) = labels
        .assignments()
        .iter()
        .zip(per_point)
        .filter(|(&l, _)| l == c)
        .fold((0.0, 0usize), |(s, n), (_, &v)| (s + v, n + 1));
    Ok(sum / count as f64)
}

/// Cluster-level mean of the per-cluster means.
pub fn macro_average(per_cluster: &[f64]) -> f64 {
    per_cluster.iter().sum::<f64>() / per_cluster.len() as f64
}

pub fn report_from_distances<D: DistanceSource + ?Sized>(labels: &Labeling, dist: &D) -> Result<SilhouetteReport> {
    let per_point = per_point_scores(labels, dist)?;
    SilhouetteReport::from_scores(labels, per_point)
}

pub fn full_report(data: &Dataset, labels: &Labeling, options: ReportOptions) -> Result<SilhouetteReport> {
    labels.check_len(data.len())?;
    require_two_clusters(labels)?;
    let use_matrix = match options.distances {
        DistanceMode::Matrix => true,
        DistanceMode::Streaming => false,
        DistanceMode::Auto => data.len() <= MATRIX_LIMIT,
    };
    if use_matrix {
        let matrix = pairwise_distances(data, options.metric);
        report_from_distances(labels, &matrix)
    } else {
        report_from_distances(labels, &StreamingDistances::new(data, options.metric))
    }
}
