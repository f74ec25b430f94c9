//! Synthetic scenarios: Gaussian blobs, a dense "nucleus" cluster that can be
//! grown to force imbalance, random relabeling, and uniform background noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Labeling};
use crate::error::{Error, Result};

/// Truth label written for background-noise rows.
pub const NOISE_LABEL: i64 = -1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub centers: Vec<Vec<f64>>,
    pub stddevs: Vec<f64>,
    pub counts: Vec<usize>,
    pub seed: u64,
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.centers.len();
        if k == 0 || self.stddevs.len() != k || self.counts.len() != k {
            return Err(Error::InvalidConfig(format!(
                "blob spec lists {} centers, {} stddevs, {} counts",
                k,
                self.stddevs.len(),
                self.counts.len()
            )));
        }
        let dim = self.centers[0].len();
        if dim == 0 || self.centers.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidConfig("centers must share a positive dimension".into()));
        }
        if self.counts.contains(&0) {
            return Err(Error::InvalidConfig("every blob needs at least one point".into()));
        }
        if self.stddevs.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig("stddevs must be positive".into()));
        }
        Ok(())
    }
}

fn gaussian_around<R: Rng + ?Sized>(center: &[f64], stddev: f64, count: usize, rng: &mut R, out: &mut Vec<f64>) {
    let normal = Normal::new(0.0, stddev).expect("validated stddev");
    for _ in 0..count {
        out.extend(center.iter().map(|&c| c + normal.sample(rng)));
    }
}

/// Isotropic Gaussian blobs, rows grouped by blob. Truth labels are the blob
/// indices.
pub fn generate_blobs(spec: &BlobSpec) -> Result<(Dataset, Labeling)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dim = spec.centers[0].len();
    let total: usize = spec.counts.iter().sum();
    let mut points = Vec::with_capacity(total * dim);
    let mut truth = Vec::with_capacity(total);
    for (b, ((center, &sd), &count)) in spec.centers.iter().zip(&spec.stddevs).zip(&spec.counts).enumerate() {
        gaussian_around(center, sd, count, &mut rng, &mut points);
        truth.extend(std::iter::repeat_n(b as i64, count));
    }
    let labels = Labeling::canonicalize(&truth);
    let data = Dataset::new(points, total, dim)?.with_truth(truth)?;
    Ok((data, labels))
}

/// Appends `added` Gaussian points around the mean of cluster `nucleus` and
/// assigns them to it. Existing rows are untouched.
pub fn grow_nucleus<R: Rng + ?Sized>(
    data: &Dataset,
    labels: &Labeling,
    nucleus: usize,
    added: usize,
    stddev: f64,
    rng: &mut R,
) -> Result<(Dataset, Labeling)> {
    labels.check_len(data.len())?;
    if nucleus >= labels.k() {
        return Err(Error::UnknownCluster(nucleus));
    }
    if !(stddev > 0.0 && stddev.is_finite()) {
        return Err(Error::InvalidConfig("stddev must be positive".into()));
    }
    let mut center = vec![0.0; data.dim()];
    let mut size = 0usize;
    for (row, &c) in data.rows().zip(labels.assignments()) {
        if c == nucleus {
            size += 1;
            center.iter_mut().zip(row).for_each(|(m, &v)| *m += v);
        }
    }
    center.iter_mut().for_each(|m| *m /= size as f64);

    let mut rows = Vec::with_capacity(added * data.dim());
    gaussian_around(&center, stddev, added, rng, &mut rows);
    let mut grown = data.clone();
    let truth_label = data.truth().and_then(|t| {
        t.iter()
            .zip(labels.assignments())
            .find(|(_, &c)| c == nucleus)
            .map(|(&t, _)| t)
    });
    let extra_truth = truth_label.map(|t| vec![t; added]);
    grown.append(&rows, extra_truth.as_deref())?;

    let mut ids = labels.assignments().to_vec();
    ids.extend(std::iter::repeat_n(nucleus, added));
    Ok((grown, Labeling::from_contiguous(ids)?))
}

/// Which labels the randomised points may receive.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeptLabel {
    /// Any of the `k` labels, including the kept cluster's.
    #[default]
    Shared,
    /// Any label except the kept cluster's, which stays exclusive to its
    /// original members.
    Reserved,
}

/// Relabels every point outside `keep` uniformly at random into `k` clusters.
/// Members of `keep` keep one common label (`keep`'s id before
/// canonicalization). The result is canonicalized.
pub fn randomize_except<R: Rng + ?Sized>(
    labels: &Labeling,
    keep: usize,
    k: usize,
    policy: KeptLabel,
    rng: &mut R,
) -> Result<Labeling> {
    if keep >= labels.k() {
        return Err(Error::UnknownCluster(keep));
    }
    let k = k.max(keep + 1);
    if policy == KeptLabel::Reserved && k < 2 {
        return Err(Error::InvalidConfig("reserving the kept label needs k >= 2".into()));
    }
    let raw: Vec<usize> = labels
        .assignments()
        .iter()
        .map(|&c| {
            if c == keep {
                keep
            } else {
                match policy {
                    KeptLabel::Shared => rng.random_range(0..k),
                    KeptLabel::Reserved => {
                        let r = rng.random_range(0..k - 1);
                        if r >= keep {
                            r + 1
                        } else {
                            r
                        }
                    }
                }
            }
        })
        .collect();
    Ok(Labeling::canonicalize(&raw))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Fraction of the final dataset that is noise, in `[0, 1)`.
    pub level: f64,
    /// Per-dimension `(low, high)`; `None` means the data's bounding box
    /// widened by 10% of its extent on each side.
    pub bounds: Option<Vec<(f64, f64)>>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDataset {
    /// Original rows followed by the noise rows. Truth labels, when the input
    /// had them, carry [`NOISE_LABEL`] on noise rows.
    pub data: Dataset,
    /// Labels of the original rows followed by one fresh cluster id for noise.
    pub labels: Labeling,
    pub is_noise: Vec<bool>,
}

impl NoisyDataset {
    pub fn noise_count(&self) -> usize {
        self.is_noise.iter().filter(|&&b| b).count()
    }
}

/// Noise points needed for `level`: `level * n / (1 - level)`, rounded half up.
pub fn noise_count(n: usize, level: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidNoiseLevel(level));
    }
    Ok((level * n as f64 / (1.0 - level) + 0.5).floor() as usize)
}

/// Bounding box of `data` widened by `fraction` of its extent on each side.
pub fn padded_bounds(data: &Dataset, fraction: f64) -> Vec<(f64, f64)> {
    data.bounding_box()
        .into_iter()
        .map(|(lo, hi)| {
            let pad = fraction * (hi - lo);
            (lo - pad, hi + pad)
        })
        .collect()
}

pub fn default_noise_bounds(data: &Dataset) -> Vec<(f64, f64)> {
    padded_bounds(data, 0.1)
}

/// Appends uniformly distributed background points so that they make up
/// `spec.level` of the result.
pub fn add_background_noise(data: &Dataset, labels: &Labeling, spec: &NoiseSpec) -> Result<NoisyDataset> {
    labels.check_len(data.len())?;
    let n_noise = noise_count(data.len(), spec.level)?;
    let bounds = match &spec.bounds {
        Some(b) => b.clone(),
        None => default_noise_bounds(data),
    };
    if bounds.len() != data.dim() {
        return Err(Error::LengthMismatch {
            expected: data.dim(),
            got: bounds.len(),
        });
    }
    if bounds.iter().any(|&(lo, hi)| lo.is_nan() || hi.is_nan() || lo >= hi) {
        return Err(Error::InvalidConfig(
            "noise bounds need low < high in every dimension".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rows = Vec::with_capacity(n_noise * data.dim());
    for _ in 0..n_noise {
        rows.extend(bounds.iter().map(|&(lo, hi)| rng.random_range(lo..hi)));
    }
    let mut out = data.clone();
    let noise_truth = vec![NOISE_LABEL; n_noise];
    out.append(&rows, data.truth().map(|_| noise_truth.as_slice()))?;

    let mut ids = labels.assignments().to_vec();
    ids.extend(std::iter::repeat_n(labels.k(), n_noise));
    let mut is_noise = vec![false; data.len()];
    is_noise.extend(std::iter::repeat_n(true, n_noise));
    Ok(NoisyDataset {
        data: out,
        labels: Labeling::from_contiguous(ids)?,
        is_noise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_blobs(seed: u64) -> BlobSpec {
        BlobSpec {
            centers: vec![vec![0.0, 0.0], vec![10.0, 0.0], vec![0.0, 10.0], vec![10.0, 10.0]],
            stddevs: vec![1.0; 4],
            counts: vec![200; 4],
            seed,
        }
    }

    #[test]
    fn blob_counts() {
        let (data, labels) = generate_blobs(&four_blobs(1)).unwrap();
        assert_eq!(data.len(), 800);
        assert_eq!(labels.k(), 4);

        let spec = BlobSpec {
            centers: (0..12).map(|i| vec![i as f64 * 10.0, 0.0]).collect(),
            stddevs: vec![0.5; 12],
            counts: vec![100; 12],
            seed: 2,
        };
        let (data, labels) = generate_blobs(&spec).unwrap();
        assert_eq!(data.len(), 1200);
        assert_eq!(labels.k(), 12);
    }

    #[test]
    fn tiny_stddev_concentrates() {
        let sd = 1e-6;
        let spec = BlobSpec {
            centers: vec![vec![3.0, -2.0]],
            stddevs: vec![sd],
            counts: vec![500],
            seed: 9,
        };
        let (data, _) = generate_blobs(&spec).unwrap();
        for row in data.rows() {
            assert!((row[0] - 3.0).abs() < 6.0 * sd);
            assert!((row[1] + 2.0).abs() < 6.0 * sd);
        }
    }

    #[test]
    fn blobs_are_reproducible() {
        assert_eq!(
            generate_blobs(&four_blobs(5)).unwrap(),
            generate_blobs(&four_blobs(5)).unwrap()
        );
        assert_ne!(
            generate_blobs(&four_blobs(5)).unwrap().0,
            generate_blobs(&four_blobs(6)).unwrap().0
        );
    }

    #[test]
    fn invalid_blob_specs() {
        let mut s = four_blobs(0);
        s.stddevs[2] = 0.0;
        assert!(generate_blobs(&s).is_err());
        let mut s = four_blobs(0);
        s.counts.pop();
        assert!(generate_blobs(&s).is_err());
    }

    #[test]
    fn nucleus_growth() {
        let (data, labels) = generate_blobs(&four_blobs(3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (same, same_labels) = grow_nucleus(&data, &labels, 2, 0, 0.05, &mut rng).unwrap();
        assert_eq!(same, data);
        assert_eq!(same_labels, labels);

        let (grown, grown_labels) = grow_nucleus(&data, &labels, 2, 300, 0.05, &mut rng).unwrap();
        assert_eq!(grown.len(), 1100);
        assert_eq!(grown_labels.sizes()[2], 500);
        assert_eq!(&grown.as_slice()[..data.as_slice().len()], data.as_slice());
        assert!(grown.truth().unwrap()[1099] == 2);
        assert!(matches!(
            grow_nucleus(&data, &labels, 9, 1, 0.05, &mut rng),
            Err(Error::UnknownCluster(9))
        ));
    }

    #[test]
    fn randomize_keeps_the_nucleus_together() {
        let labels = Labeling::canonicalize(&[0, 0, 1, 1, 2, 2, 2, 1, 0]);
        for policy in [KeptLabel::Shared, KeptLabel::Reserved] {
            let mut rng = ChaCha8Rng::seed_from_u64(8);
            let r = randomize_except(&labels, 2, 3, policy, &mut rng).unwrap();
            let kept: Vec<usize> = [4, 5, 6].iter().map(|&i| r.get(i)).collect();
            assert!(kept.iter().all(|&c| c == kept[0]));
            if policy == KeptLabel::Reserved {
                for i in [0, 1, 2, 3, 7, 8] {
                    assert_ne!(r.get(i), kept[0]);
                }
            }
        }
        let only = Labeling::canonicalize(&[3, 3, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            randomize_except(&only, 0, 1, KeptLabel::Shared, &mut rng).unwrap(),
            only
        );
    }

    #[test]
    fn noise_counts() {
        assert_eq!(noise_count(800, 0.0).unwrap(), 0);
        assert_eq!(noise_count(800, 0.25).unwrap(), 267);
        assert_eq!(noise_count(800, 0.5).unwrap(), 800);
        assert!(noise_count(800, 1.0).is_err());
        assert!(noise_count(800, -0.1).is_err());
    }

    #[test]
    fn noise_is_appended_inside_bounds() {
        let (data, labels) = generate_blobs(&four_blobs(1)).unwrap();
        let spec = NoiseSpec {
            level: 0.25,
            bounds: None,
            seed: 3,
        };
        let noisy = add_background_noise(&data, &labels, &spec).unwrap();
        assert_eq!(noisy.data.len(), 800 + 267);
        assert_eq!(noisy.noise_count(), 267);
        assert_eq!(&noisy.data.as_slice()[..1600], data.as_slice());
        assert!(noisy.data.truth().unwrap()[800..].iter().all(|&t| t == NOISE_LABEL));
        let bounds = default_noise_bounds(&data);
        for row in noisy.data.rows().skip(800) {
            for (v, (lo, hi)) in row.iter().zip(&bounds) {
                assert!(v >= lo && v < hi);
            }
        }
        let clean = add_background_noise(
            &data,
            &labels,
            &NoiseSpec {
                level: 0.0,
                bounds: None,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(clean.data, data);
    }
}
