//! Shared containers: datasets, cluster labelings and pairwise distances.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense `N x d` table of finite reals, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    n: usize,
    dim: usize,
    truth: Option<Vec<i64>>,
    column_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(points: Vec<f64>, n: usize, dim: usize) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::InvalidDataset(format!(
                "need at least one row and one column, got {n}x{dim}"
            )));
        }
        if points.len() != n * dim {
            return Err(Error::LengthMismatch {
                expected: n * dim,
                got: points.len(),
            });
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self {
            points,
            n,
            dim,
            truth: None,
            column_names: None,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::LengthMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::new(rows.concat(), rows.len(), dim)
    }

    pub fn with_truth(mut self, truth: Vec<i64>) -> Result<Self> {
        if truth.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: truth.len(),
            });
        }
        self.truth = Some(truth);
        Ok(self)
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: names.len(),
            });
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    pub fn truth(&self) -> Option<&[i64]> {
        self.truth.as_deref()
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Rows `indices` in the given order. Truth labels follow the rows.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n {
                return Err(Error::IndexOutOfRange { index: i, len: self.n });
            }
            points.extend_from_slice(self.row(i));
        }
        let mut out = Self::new(points, indices.len(), self.dim)?;
        if let Some(t) = &self.truth {
            out.truth = Some(indices.iter().map(|&i| t[i]).collect());
        }
        out.column_names = self.column_names.clone();
        Ok(out)
    }

    /// Appends rows; `truth` is required iff the dataset already carries truth labels.
    pub fn append(&mut self, rows: &[f64], truth: Option<&[i64]>) -> Result<()> {
        if !rows.len().is_multiple_of(self.dim) {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                got: rows.len() % self.dim,
            });
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset("non-finite value in appended rows".into()));
        }
        let added = rows.len() / self.dim;
        match (&mut self.truth, truth) {
            (Some(t), Some(extra)) if extra.len() == added => t.extend_from_slice(extra),
            (Some(_), Some(extra)) => {
                return Err(Error::LengthMismatch {
                    expected: added,
                    got: extra.len(),
                })
            }
            (Some(_), None) => return Err(Error::InvalidDataset("appended rows need truth labels".into())),
            (None, _) => {}
        }
        self.points.extend_from_slice(rows);
        self.n += added;
        Ok(())
    }

    /// Per-dimension `(min, max)`.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for row in self.rows() {
            for (b, &v) in bounds.iter_mut().zip(row) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        bounds
    }
}

/// Cluster assignment with ids `0..k`, every id in use.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Labeling {
    assignments: Vec<usize>,
    k: usize,
}

impl Labeling {
    /// Remaps arbitrary integer ids to `0..k` preserving first-occurrence order.
    pub fn canonicalize<T: Copy + Eq + std::hash::Hash>(raw: &[T]) -> Self {
        let mut map: HashMap<T, usize> = HashMap::new();
        let assignments = raw
            .iter()
            .map(|&id| {
                let next = map.len();
                *map.entry(id).or_insert(next)
            })
            .collect();
        Self {
            assignments,
            k: map.len(),
        }
    }

    /// Accepts ids that already cover `0..k` without gaps, keeping their numbering.
    pub fn from_contiguous(ids: Vec<usize>) -> Result<Self> {
        let k = ids.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; k];
        for &c in &ids {
            seen[c] = true;
        }
        if let Some(missing) = seen.iter().position(|&s| !s) {
            return Err(Error::UnknownCluster(missing));
        }
        Ok(Self { assignments: ids, k })
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.assignments[i]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &c in &self.assignments {
            sizes[c] += 1;
        }
        sizes
    }

    /// Row indices of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.k];
        for (i, &c) in self.assignments.iter().enumerate() {
            members[c].push(i);
        }
        members
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: self.len(),
            });
        }
        Ok(())
    }

    pub fn to_i64(&self) -> Vec<i64> {
        self.assignments.iter().map(|&c| c as i64).collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
}

impl Metric {
    #[inline]
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => squared_euclidean(a, b).sqrt(),
        }
    }
}

#[inline]
pub fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let diff = x - y;
            diff * diff
        })
        .sum()
}

/// Anything that can hand out full rows of the pairwise distance matrix.
pub trait DistanceSource: Sync {
    fn len(&self) -> usize;

    /// Writes `d(i, j)` for every `j` into `out` (length `len()`).
    fn fill_row(&self, i: usize, out: &mut [f64]);

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Symmetric `N x N` distance matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    entries: Vec<f64>,
    n: usize,
    metric: Metric,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }
}

impl DistanceSource for DistanceMatrix {
    fn len(&self) -> usize {
        self.n
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        out.copy_from_slice(self.row(i));
    }
}

/// Computes rows on demand from the coordinates; O(N) memory.
#[derive(Debug, Clone, Copy)]
pub struct StreamingDistances<'a> {
    data: &'a Dataset,
    metric: Metric,
}

impl<'a> StreamingDistances<'a> {
    pub fn new(data: &'a Dataset, metric: Metric) -> Self {
        Self { data, metric }
    }
}

impl DistanceSource for StreamingDistances<'_> {
    fn len(&self) -> usize {
        self.data.len()
    }

    fn fill_row(&self, i: usize, out: &mut [f64]) {
        fill_distance_row(self.data, self.metric, i, out);
    }
}

fn fill_distance_row(data: &Dataset, metric: Metric, i: usize, out: &mut [f64]) {
    let xi = data.row(i);
    for (j, slot) in out.iter_mut().enumerate() {
        // d(i, j) and d(j, i) must be bit-identical, so order the operands.
        *slot = if j == i {
            0.0
        } else if j < i {
            metric.distance(data.row(j), xi)
        } else {
            metric.distance(xi, data.row(j))
        };
    }
}

/// Full pairwise distance matrix. Rows are computed in parallel; every entry
/// is produced by the same scalar kernel, so the result does not depend on
/// the thread count.
pub fn pairwise_distances(data: &Dataset, metric: Metric) -> DistanceMatrix {
    let n = data.len();
    let mut entries = vec![0.0; n * n];
    entries
        .par_chunks_mut(n)
        .enumerate()
        .for_each(|(i, row)| fill_distance_row(data, metric, i, row));
    DistanceMatrix { entries, n, metric }
}

/// Row `i` of [`pairwise_distances`] without materialising the matrix.
pub fn distances_from_point(data: &Dataset, metric: Metric, i: usize) -> Result<Vec<f64>> {
    if i >= data.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: data.len(),
        });
    }
    let mut row = vec![0.0; data.len()];
    fill_distance_row(data, metric, i, &mut row);
    Ok(row)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub cluster_sizes: Vec<usize>,
    /// Smallest cluster size over largest cluster size.
    pub imbalance_ratio: f64,
    pub bounding_box: Vec<(f64, f64)>,
}

pub fn dataset_stats(data: &Dataset, labels: &Labeling) -> Result<DatasetStats> {
    labels.check_len(data.len())?;
    let cluster_sizes = labels.sizes();
    let min = cluster_sizes.iter().copied().min().unwrap_or(0);
    let max = cluster_sizes.iter().copied().max().unwrap_or(0);
    Ok(DatasetStats {
        imbalance_ratio: min as f64 / max as f64,
        cluster_sizes,
        bounding_box: data.bounding_box(),
    })
}
