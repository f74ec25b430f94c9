#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use silkit::{Dataset, Labeling};

/// Straightforward silhouette: for every point, walk every other point once
/// per cluster. Returns (per-point, micro, macro).
pub fn naive_silhouette(rows: &[Vec<f64>], labels: &[usize]) -> (Vec<f64>, f64, f64) {
    let n = rows.len();
    let k = labels.iter().max().unwrap() + 1;
    let dist = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt() };
    let mut s = vec![0.0; n];
    for i in 0..n {
        let own = labels[i];
        let own_size = labels.iter().filter(|&&l| l == own).count();
        if own_size == 1 {
            continue;
        }
        let mut a = 0.0;
        for j in 0..n {
            if j != i && labels[j] == own {
                a += dist(&rows[i], &rows[j]);
            }
        }
        a /= (own_size - 1) as f64;
        let mut b = f64::INFINITY;
        for c in 0..k {
            if c == own {
                continue;
            }
            let mut sum = 0.0;
            let mut count = 0;
            for j in 0..n {
                if labels[j] == c {
                    sum += dist(&rows[i], &rows[j]);
                    count += 1;
                }
            }
            if count > 0 {
                b = b.min(sum / count as f64);
            }
        }
        let m = a.max(b);
        s[i] = if m == 0.0 { 0.0 } else { (b - a) / m };
    }
    let micro = s.iter().sum::<f64>() / n as f64;
    let mut cluster_means = Vec::new();
    for c in 0..k {
        let members: Vec<f64> = (0..n).filter(|&i| labels[i] == c).map(|i| s[i]).collect();
        if !members.is_empty() {
            cluster_means.push(members.iter().sum::<f64>() / members.len() as f64);
        }
    }
    let macro_avg = cluster_means.iter().sum::<f64>() / cluster_means.len() as f64;
    (s, micro, macro_avg)
}

/// Random points around `k` random centers, every cluster non-empty.
pub fn random_instance(seed: u64, n: usize, dim: usize, k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect())
        .collect();
    let labels: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    let rows = labels
        .iter()
        .map(|&c| centers[c].iter().map(|&m| m + rng.random_range(-2.0..2.0)).collect())
        .collect();
    (rows, labels)
}

pub fn to_dataset(rows: &[Vec<f64>]) -> Dataset {
    Dataset::from_rows(rows).unwrap()
}

pub fn to_labeling(labels: &[usize]) -> Labeling {
    Labeling::from_contiguous(labels.to_vec()).unwrap()
}

/// True when the two labelings induce the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    use std::collections::HashMap;
    let mut ab = HashMap::new();
    let mut ba = HashMap::new();
    a.iter()
        .zip(b)
        .all(|(&x, &y)| *ab.entry(x).or_insert(y) == y && *ba.entry(y).or_insert(x) == x)
}
