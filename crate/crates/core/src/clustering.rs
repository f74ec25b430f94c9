//! k-means: Lloyd iterations, k-means++ seeding and the incremental global
//! k-means++ scheme that grows a `k - 1` solution into a `k` solution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{squared_euclidean, Dataset, Labeling};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Stop once the relative SSE improvement of an iteration drops below this.
    pub tol: f64,
    pub seed: u64,
    /// Candidate centers tried per stage of the global variant.
    pub n_candidates: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            max_iters: 300,
            tol: 1e-6,
            seed: 0,
            n_candidates: 10,
        }
    }
}

impl KMeansConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.max_iters == 0 || self.n_candidates == 0 {
            return Err(Error::InvalidConfig(
                "k, max_iters and n_candidates must be at least 1".into(),
            ));
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return Err(Error::InvalidConfig("tol must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub centers: Vec<Vec<f64>>,
    pub labeling: Labeling,
    pub sse: f64,
    pub iterations: usize,
    /// Assignment SSE observed at the start of every iteration.
    pub sse_trace: Vec<f64>,
}

impl KMeansResult {
    pub fn k(&self) -> usize {
        self.centers.len()
    }
}

/// Index of the nearest center (ties to the smaller index) and the squared distance.
#[inline]
fn nearest_center(x: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centers.iter().enumerate() {
        let d = squared_euclidean(x, center);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    (best, best_d)
}

/// Nearest-center assignment with per-point squared distances.
fn assign(data: &Dataset, centers: &[Vec<f64>]) -> (Vec<usize>, Vec<f64>) {
    (0..data.len())
        .into_par_iter()
        .map(|i| nearest_center(data.row(i), centers))
        .unzip()
}

/// Gives every empty cluster a point: repeatedly seize the point farthest from
/// its center among clusters that can spare one, and make it the empty
/// cluster's center.
fn repair_empty(labels: &mut [usize], sq: &mut [f64], centers: &mut [Vec<f64>], data: &Dataset) {
    let k = centers.len();
    let mut sizes = vec![0usize; k];
    for &c in labels.iter() {
        sizes[c] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let mut far = None;
        let mut far_d = -1.0;
        for (i, (&c, &d)) in labels.iter().zip(sq.iter()).enumerate() {
            if sizes[c] > 1 && d > far_d {
                far_d = d;
                far = Some(i);
            }
        }
        let Some(i) = far else { return };
        sizes[labels[i]] -= 1;
        sizes[empty] += 1;
        labels[i] = empty;
        sq[i] = 0.0;
        centers[empty] = data.row(i).to_vec();
    }
}

fn means(data: &Dataset, labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let dim = data.dim();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (row, &c) in data.rows().zip(labels) {
        counts[c] += 1;
        for (s, &v) in sums[c].iter_mut().zip(row) {
            *s += v;
        }
    }
    for (s, &n) in sums.iter_mut().zip(&counts) {
        if n > 0 {
            s.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    sums
}

fn total(sq: &[f64]) -> f64 {
    sq.iter().sum()
}

/// Lloyd iterations from the given centers. Every returned cluster is
/// non-empty.
pub fn lloyd(data: &Dataset, initial_centers: &[Vec<f64>], config: &KMeansConfig) -> Result<KMeansResult> {
    let k = initial_centers.len();
    if k == 0 {
        return Err(Error::InvalidConfig("need at least one center".into()));
    }
    if k > data.len() {
        return Err(Error::TooManyClusters { k, n: data.len() });
    }
    if let Some(c) = initial_centers.iter().find(|c| c.len() != data.dim()) {
        return Err(Error::LengthMismatch {
            expected: data.dim(),
            got: c.len(),
        });
    }
    let mut centers = initial_centers.to_vec();
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut previous: Option<Vec<usize>> = None;

    while iterations < config.max_iters {
        let (mut labels, mut sq) = assign(data, &centers);
        repair_empty(&mut labels, &mut sq, &mut centers, data);
        let sse = total(&sq);
        let stalled = trace.last().is_some_and(|&prev: &f64| prev - sse <= config.tol * prev);
        trace.push(sse);
        if previous.as_ref() == Some(&labels) {
            break;
        }
        centers = means(data, &labels, k);
        iterations += 1;
        if stalled {
            break;
        }
        previous = Some(labels);
    }

    let (mut labels, mut sq) = assign(data, &centers);
    repair_empty(&mut labels, &mut sq, &mut centers, data);
    let sse = total(&sq);
    Ok(KMeansResult {
        labeling: Labeling::from_contiguous(labels)?,
        centers,
        sse,
        iterations,
        sse_trace: trace,
    })
}

/// Draws an index with probability proportional to `weights`.
fn weighted_pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let sum: f64 = weights.iter().sum();
    if sum.is_nan() || sum <= 0.0 {
        return None;
    }
    let target = rng.random::<f64>() * sum;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    last
}

/// Squared distance from every point to its nearest center.
fn nearest_sq(data: &Dataset, centers: &[Vec<f64>]) -> Vec<f64> {
    (0..data.len())
        .into_par_iter()
        .map(|i| nearest_center(data.row(i), centers).1)
        .collect()
}

/// k-means++ seeding: the first center is a uniform draw, every further one is
/// drawn with probability proportional to the squared distance to the nearest
/// center chosen so far. Returns row indices.
pub fn kmeanspp_indices<R: Rng + ?Sized>(data: &Dataset, k: usize, rng: &mut R) -> Result<Vec<usize>> {
    if k > data.len() {
        return Err(Error::TooManyClusters { k, n: data.len() });
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut chosen = vec![rng.random_range(0..data.len())];
    let mut weights: Vec<f64> = data.rows().map(|x| squared_euclidean(x, data.row(chosen[0]))).collect();
    while chosen.len() < k {
        let next = weighted_pick(&weights, rng).unwrap_or_else(|| {
            // every point sits on a center already; fall back to an unused row
            (0..data.len()).find(|i| !chosen.contains(i)).unwrap_or(0)
        });
        chosen.push(next);
        let c = data.row(next);
        for (w, x) in weights.iter_mut().zip(data.rows()) {
            *w = w.min(squared_euclidean(x, c));
        }
    }
    Ok(chosen)
}

pub fn kmeanspp_seed<R: Rng + ?Sized>(data: &Dataset, k: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    Ok(kmeanspp_indices(data, k, rng)?
        .into_iter()
        .map(|i| data.row(i).to_vec())
        .collect())
}

/// Plain k-means with k-means++ seeding.
pub fn kmeans(data: &Dataset, config: &KMeansConfig) -> Result<KMeansResult> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let seeds = kmeanspp_seed(data, config.k, &mut rng)?;
    lloyd(data, &seeds, config)
}

/// Incremental global k-means++.
///
/// `k = 1` is the data mean. Each later stage keeps the converged `k - 1`
/// centers, draws `n_candidates` distinct candidate points with k-means++
/// probabilities, runs Lloyd from every augmented center set and keeps the
/// lowest SSE (ties to the earlier candidate). Returns solutions for
/// `k = 1..=k_max`, index `k - 1`.
pub fn global_kmeanspp(data: &Dataset, k_max: usize, config: &KMeansConfig) -> Result<Vec<KMeansResult>> {
    config.validate()?;
    if k_max == 0 {
        return Err(Error::InvalidConfig("k_max must be at least 1".into()));
    }
    if k_max > data.len() {
        return Err(Error::TooManyClusters {
            k: k_max,
            n: data.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mean = means(data, &vec![0; data.len()], 1);
    let mut solutions = vec![lloyd(data, &mean, config)?];

    for _ in 2..=k_max {
        let current = &solutions.last().expect("k = 1 solution").centers;
        let mut weights = nearest_sq(data, current);
        let mut candidates = Vec::with_capacity(config.n_candidates);
        while candidates.len() < config.n_candidates {
            match weighted_pick(&weights, &mut rng) {
                Some(i) => {
                    weights[i] = 0.0;
                    candidates.push(i);
                }
                None => break,
            }
        }
        if candidates.is_empty() {
            // every point sits on a center; empty-cluster repair takes over
            candidates.push(0);
        }
        let runs: Vec<Result<KMeansResult>> = candidates
            .par_iter()
            .map(|&i| {
                let mut init = current.clone();
                init.push(data.row(i).to_vec());
                lloyd(data, &init, config)
            })
            .collect();
        let mut best: Option<KMeansResult> = None;
        for run in runs {
            let run = run?;
            if best.as_ref().is_none_or(|b| run.sse < b.sse) {
                best = Some(run);
            }
        }
        solutions.push(best.expect("at least one candidate"));
    }
    Ok(solutions)
}
