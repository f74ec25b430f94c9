//! Ready-made synthetic studies: the lattice dataset with a growing nucleus,
//! the four-blob background-noise study, and the subsampling study on the
//! imbalanced lattice.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::KMeansConfig;
use crate::data::{Dataset, Labeling};
use crate::error::{Error, Result};
use crate::kselect::{sweep, Scoring, SweepConfig, SweepResult};
use crate::sampling::{monte_carlo_study, Strategy, StudyConfig, StudyResult};
use crate::silhouette::{full_report, Aggregation, ReportOptions};
use crate::synth::{
    add_background_noise, generate_blobs, grow_nucleus, randomize_except, BlobSpec, KeptLabel, NoiseSpec,
};

pub const NUCLEUS_SIZES: [usize; 6] = [100, 500, 1000, 2000, 5000, 10_000];
pub const NOISE_LEVELS: [f64; 6] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
pub const SAMPLE_SIZES: [usize; 5] = [50, 100, 200, 400, 800];

/// Blobs on the nodes of a square lattice nearest the origin, with stddevs
/// spread evenly over `[std_min, std_max]`, plus a tight nucleus blob at the
/// origin. The nucleus is the last cluster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSpec {
    pub blobs: usize,
    pub spacing: f64,
    pub per_blob: usize,
    pub std_min: f64,
    pub std_max: f64,
    pub nucleus_std: f64,
    pub seed: u64,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            blobs: 11,
            spacing: 10.0,
            per_blob: 100,
            std_min: 0.2,
            std_max: 2.0,
            nucleus_std: 0.05,
            seed: 0,
        }
    }
}

const LATTICE_RADIUS: i32 = 3;

impl LatticeSpec {
    pub fn nucleus(&self) -> usize {
        self.blobs
    }

    /// Lattice nodes ordered by distance to the origin, then by coordinates.
    pub fn centers(&self) -> Result<Vec<Vec<f64>>> {
        let r = LATTICE_RADIUS;
        let mut nodes: Vec<(i32, i32)> = (-r..=r)
            .flat_map(|x| (-r..=r).map(move |y| (x, y)))
            .filter(|&p| p != (0, 0))
            .collect();
        if self.blobs == 0 || self.blobs > nodes.len() {
            return Err(Error::InvalidConfig(format!(
                "lattice holds 1..={} blobs, got {}",
                nodes.len(),
                self.blobs
            )));
        }
        nodes.sort_by_key(|&(x, y)| (x * x + y * y, x, y));
        Ok(nodes[..self.blobs]
            .iter()
            .map(|&(x, y)| vec![self.spacing * f64::from(x), self.spacing * f64::from(y)])
            .collect())
    }

    pub fn stddevs(&self) -> Vec<f64> {
        let m = self.blobs.saturating_sub(1).max(1) as f64;
        (0..self.blobs)
            .map(|i| self.std_min + (self.std_max - self.std_min) * i as f64 / m)
            .collect()
    }

    pub fn blob_spec(&self) -> Result<BlobSpec> {
        let mut centers = self.centers()?;
        centers.push(vec![0.0, 0.0]);
        let mut stddevs = self.stddevs();
        stddevs.push(self.nucleus_std);
        Ok(BlobSpec {
            centers,
            stddevs,
            counts: vec![self.per_blob; self.blobs + 1],
            seed: self.seed,
        })
    }

    pub fn generate(&self) -> Result<(Dataset, Labeling)> {
        generate_blobs(&self.blob_spec()?)
    }

    /// One dataset per requested nucleus size. Each is an extension of the
    /// previous one, so smaller datasets are row prefixes of larger ones.
    pub fn with_nucleus_sizes(&self, sizes: &[usize]) -> Result<Vec<(Dataset, Labeling)>> {
        if sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("nucleus sizes must be strictly increasing".into()));
        }
        if sizes.first().is_some_and(|&s| s < self.per_blob) {
            return Err(Error::InvalidConfig(format!(
                "nucleus sizes start at the blob size {}",
                self.per_blob
            )));
        }
        let (mut data, mut labels) = self.generate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_add(1));
        let mut current = self.per_blob;
        let mut out = Vec::with_capacity(sizes.len());
        for &size in sizes {
            if size > current {
                (data, labels) = grow_nucleus(
                    &data,
                    &labels,
                    self.nucleus(),
                    size - current,
                    self.nucleus_std,
                    &mut rng,
                )?;
                current = size;
            }
            out.push((data.clone(), labels.clone()));
        }
        Ok(out)
    }

    pub fn with_nucleus_size(&self, size: usize) -> Result<(Dataset, Labeling)> {
        let mut v = self.with_nucleus_sizes(&[size])?;
        Ok(v.remove(0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NucleusStudyConfig {
    pub lattice: LatticeSpec,
    pub sizes: Vec<usize>,
    pub randomize_seed: u64,
    pub policy: KeptLabel,
    pub report: ReportOptions,
}

impl Default for NucleusStudyConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::default(),
            sizes: NUCLEUS_SIZES.to_vec(),
            randomize_seed: 2,
            policy: KeptLabel::Reserved,
            report: ReportOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NucleusRow {
    pub nucleus_size: usize,
    pub n: usize,
    pub optimal_micro: f64,
    pub optimal_macro: f64,
    pub random_micro: f64,
    pub random_macro: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NucleusStudy {
    /// Micro score of the true labeling before the nucleus grows.
    pub reference_micro: f64,
    pub rows: Vec<NucleusRow>,
}

impl NucleusStudy {
    /// Smallest nucleus size at which the randomised labeling outscores the
    /// reference.
    pub fn crossing_size(&self) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.random_micro > self.reference_micro)
            .map(|r| r.nucleus_size)
    }
}

/// Scores the true labeling and a labeling that is random everywhere except
/// on the nucleus, while the nucleus grows. The random labels of the
/// original rows are drawn once and shared by every size.
pub fn nucleus_study(config: &NucleusStudyConfig) -> Result<NucleusStudy> {
    let lattice = &config.lattice;
    let (base, base_labels) = lattice.generate()?;
    let reference_micro = full_report(&base, &base_labels, config.report)?.micro;
    let mut rng = ChaCha8Rng::seed_from_u64(config.randomize_seed);
    let base_random = randomize_except(
        &base_labels,
        lattice.nucleus(),
        base_labels.k(),
        config.policy,
        &mut rng,
    )?;
    let nucleus_label = base_random.get(
        base_labels
            .assignments()
            .iter()
            .position(|&c| c == lattice.nucleus())
            .expect("nucleus present"),
    );

    let rows = lattice
        .with_nucleus_sizes(&config.sizes)?
        .into_iter()
        .zip(&config.sizes)
        .map(|((data, labels), &nucleus_size)| {
            let optimal = full_report(&data, &labels, config.report)?;
            let mut ids = base_random.assignments().to_vec();
            ids.resize(data.len(), nucleus_label);
            let random = full_report(&data, &Labeling::from_contiguous(ids)?, config.report)?;
            Ok(NucleusRow {
                nucleus_size,
                n: data.len(),
                optimal_micro: optimal.micro,
                optimal_macro: optimal.macro_avg,
                random_micro: random.micro,
                random_macro: random.macro_avg,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NucleusStudy { reference_micro, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleStudyConfig {
    pub lattice: LatticeSpec,
    pub nucleus_size: usize,
    pub study: StudyConfig,
    pub report: ReportOptions,
}

impl Default for SampleStudyConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::default(),
            nucleus_size: 10_000,
            study: StudyConfig {
                sizes: SAMPLE_SIZES.to_vec(),
                runs: 30,
                strategies: vec![Strategy::Uniform, Strategy::Balanced],
                aggregation: Aggregation::Macro,
                seed: 2,
            },
            report: ReportOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleStudy {
    /// Score of the whole dataset under the study's aggregation.
    pub full_score: f64,
    pub result: StudyResult,
}

/// Subsampling study on the true labeling of the lattice with a grown
/// nucleus.
pub fn sample_study(config: &SampleStudyConfig) -> Result<SampleStudy> {
    let (data, labels) = config.lattice.with_nucleus_size(config.nucleus_size)?;
    let full_score = full_report(&data, &labels, config.report)?.score(config.study.aggregation);
    let result = monte_carlo_study(&data, &labels, &config.study, config.report)?;
    Ok(SampleStudy { full_score, result })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NucleusSweepConfig {
    pub lattice: LatticeSpec,
    pub nucleus_size: usize,
    pub sweep: SweepConfig,
}

impl Default for NucleusSweepConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::default(),
            nucleus_size: 10_000,
            sweep: SweepConfig {
                k_min: 2,
                k_max: 30,
                kmeans: KMeansConfig::default(),
                scoring: Scoring::Full,
                report: ReportOptions::default(),
            },
        }
    }
}

/// Number-of-clusters sweep on the lattice with a grown nucleus.
pub fn nucleus_sweep(config: &NucleusSweepConfig) -> Result<SweepResult> {
    let (data, _) = config.lattice.with_nucleus_size(config.nucleus_size)?;
    sweep(&data, &config.sweep)
}

/// Equal-sized Gaussian blobs on the corners of a square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SquareBlobs {
    pub side: f64,
    pub stddev: f64,
    pub per_blob: usize,
    pub seed: u64,
}

impl Default for SquareBlobs {
    fn default() -> Self {
        Self {
            side: 10.0,
            stddev: 1.0,
            per_blob: 200,
            seed: 0,
        }
    }
}

impl SquareBlobs {
    pub fn blob_spec(&self) -> BlobSpec {
        let s = self.side;
        BlobSpec {
            centers: vec![vec![0.0, 0.0], vec![s, 0.0], vec![0.0, s], vec![s, s]],
            stddevs: vec![self.stddev; 4],
            counts: vec![self.per_blob; 4],
            seed: self.seed,
        }
    }

    pub fn generate(&self) -> Result<(Dataset, Labeling)> {
        generate_blobs(&self.blob_spec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseStudyConfig {
    pub blobs: SquareBlobs,
    pub levels: Vec<f64>,
    /// Per-dimension `(low, high)` box for the noise; `None` uses the data's
    /// bounding box widened by 10% per side.
    pub noise_bounds: Option<Vec<(f64, f64)>>,
    /// Level `i` draws its noise with seed `noise_seed + i`.
    pub noise_seed: u64,
    pub sweep: SweepConfig,
}

impl Default for NoiseStudyConfig {
    fn default() -> Self {
        Self {
            blobs: SquareBlobs::default(),
            levels: NOISE_LEVELS.to_vec(),
            noise_bounds: Some(vec![(-10.0, 20.0); 2]),
            noise_seed: 1000,
            sweep: SweepConfig {
                k_min: 2,
                k_max: 30,
                kmeans: KMeansConfig::default(),
                scoring: Scoring::Full,
                report: ReportOptions::default(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseLevelResult {
    pub level: f64,
    pub noise_points: usize,
    pub k_micro: usize,
    pub k_macro: usize,
    pub sweep: SweepResult,
}

/// Adds background noise at each level and estimates the number of clusters
/// with both aggregations.
pub fn noise_study(config: &NoiseStudyConfig) -> Result<Vec<NoiseLevelResult>> {
    let (data, labels) = config.blobs.generate()?;
    config
        .levels
        .iter()
        .enumerate()
        .map(|(i, &level)| {
            let noisy = add_background_noise(
                &data,
                &labels,
                &NoiseSpec {
                    level,
                    bounds: config.noise_bounds.clone(),
                    seed: config.noise_seed.wrapping_add(i as u64),
                },
            )?;
            let sweep = sweep(&noisy.data, &config.sweep)?;
            Ok(NoiseLevelResult {
                level,
                noise_points: noisy.noise_count(),
                k_micro: sweep.argmax_micro,
                k_macro: sweep.argmax_macro,
                sweep,
            })
        })
        .collect()
}
