//! Randomised checks of the silhouette kernels against a brute-force oracle,
//! plus structural invariants of the distance, clustering, sampling and
//! generator code.

mod common;

use common::{naive_silhouette, random_instance, to_dataset, to_labeling};
use proptest::prelude::*;
use silkit::clustering::{global_kmeanspp, kmeans, KMeansConfig};
use silkit::data::{DistanceSource, StreamingDistances};
use silkit::kselect::{estimate_k, SweepResult, SweepRow};
use silkit::sampling::{balanced_quotas, sample, SampleSpec, Strategy as Sampling};
use silkit::synth::{add_background_noise, generate_blobs, grow_nucleus, noise_count, BlobSpec, NoiseSpec};
use silkit::{full_report, pairwise_distances, Aggregation, Labeling, Metric, ReportOptions};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance() -> impl Strategy<Value = (u64, usize, usize, usize)> {
    (any::<u64>(), 2..=8usize, 1..=10usize)
        .prop_flat_map(|(seed, k, dim)| (Just(seed), k..=200usize, Just(dim), Just(k)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn report_matches_oracle((seed, n, dim, k) in instance()) {
        let (rows, labels) = random_instance(seed, n, dim, k);
        let report = full_report(&to_dataset(&rows), &to_labeling(&labels), ReportOptions::default()).unwrap();
        let (s, micro, macro_avg) = naive_silhouette(&rows, &labels);
        for (got, want) in report.per_point.iter().zip(&s) {
            prop_assert!((got - want).abs() <= 1e-12, "{got} vs {want}");
        }
        prop_assert!((report.micro - micro).abs() <= 1e-12);
        prop_assert!((report.macro_avg - macro_avg).abs() <= 1e-12);
    }

    #[test]
    fn scores_are_bounded((seed, n, dim, k) in instance()) {
        let (rows, labels) = random_instance(seed, n, dim, k);
        let report = full_report(&to_dataset(&rows), &to_labeling(&labels), ReportOptions::default()).unwrap();
        prop_assert!(report.per_point.iter().all(|s| (-1.0..=1.0).contains(s)));
        prop_assert!(report.per_cluster.iter().all(|s| (-1.0..=1.0).contains(s)));
    }

    #[test]
    fn balanced_clusters_agree(seed in any::<u64>(), k in 2..=8usize, per in 1..=25usize, dim in 1..=5usize) {
        let (rows, _) = random_instance(seed, k * per, dim, k);
        let labels: Vec<usize> = (0..k * per).map(|i| i % k).collect();
        let report = full_report(&to_dataset(&rows), &to_labeling(&labels), ReportOptions::default()).unwrap();
        prop_assert!((report.micro - report.macro_avg).abs() <= 1e-12);
    }

    #[test]
    fn permutation_invariance((seed, n, dim, k) in instance(), shuffle in any::<u64>()) {
        use rand::seq::SliceRandom;
        let (rows, labels) = random_instance(seed, n, dim, k);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let p_rows: Vec<Vec<f64>> = order.iter().map(|&i| rows[i].clone()).collect();
        let p_labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
        let base = full_report(&to_dataset(&rows), &to_labeling(&labels), ReportOptions::default()).unwrap();
        let perm = full_report(&to_dataset(&p_rows), &Labeling::canonicalize(&p_labels), ReportOptions::default()).unwrap();
        for (pos, &i) in order.iter().enumerate() {
            prop_assert!((perm.per_point[pos] - base.per_point[i]).abs() <= 1e-12);
        }
        prop_assert!((perm.micro - base.micro).abs() <= 1e-12);
        prop_assert!((perm.macro_avg - base.macro_avg).abs() <= 1e-12);
    }

    #[test]
    fn scale_invariance((seed, n, dim, k) in instance(), factor in 1e-3..1e3f64) {
        let (rows, labels) = random_instance(seed, n, dim, k);
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * factor).collect()).collect();
        let a = full_report(&to_dataset(&rows), &to_labeling(&labels), ReportOptions::default()).unwrap();
        let b = full_report(&to_dataset(&scaled), &to_labeling(&labels), ReportOptions::default()).unwrap();
        for (x, y) in a.per_point.iter().zip(&b.per_point) {
            prop_assert!((x - y).abs() <= 1e-9);
        }
    }

    #[test]
    fn distance_matrix_is_a_metric(seed in any::<u64>(), n in 2..=40usize, dim in 1..=6usize) {
        let (rows, _) = random_instance(seed, n, dim, 1);
        let data = to_dataset(&rows);
        let m = pairwise_distances(&data, Metric::Euclidean);
        let stream = StreamingDistances::new(&data, Metric::Euclidean);
        let mut row = vec![0.0; n];
        for i in 0..n {
            prop_assert_eq!(m.get(i, i), 0.0);
            stream.fill_row(i, &mut row);
            prop_assert_eq!(&row[..], m.row(i));
            for j in 0..n {
                prop_assert_eq!(m.get(i, j).to_bits(), m.get(j, i).to_bits());
                for l in 0..n {
                    prop_assert!(m.get(i, l) <= m.get(i, j) + m.get(j, l) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn canonicalize_is_idempotent(raw in proptest::collection::vec(-5i64..5, 1..60)) {
        let once = Labeling::canonicalize(&raw);
        let twice = Labeling::canonicalize(once.assignments());
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.sizes().iter().sum::<usize>(), raw.len());
        prop_assert!(once.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn lloyd_never_increases_sse(seed in any::<u64>(), n in 10..=120usize, k in 1..=6usize) {
        let (rows, _) = random_instance(seed, n, 2, 3);
        let config = KMeansConfig { k, seed, ..KMeansConfig::default() };
        let result = kmeans(&to_dataset(&rows), &config).unwrap();
        for w in result.sse_trace.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        prop_assert_eq!(result.labeling.k(), k);
        prop_assert_eq!(result.labeling.len(), n);
    }

    #[test]
    fn global_sse_decreases_with_k(seed in any::<u64>(), n in 12..=100usize) {
        let (rows, _) = random_instance(seed, n, 2, 4);
        let config = KMeansConfig { seed, n_candidates: 4, ..KMeansConfig::default() };
        let solutions = global_kmeanspp(&to_dataset(&rows), 8, &config).unwrap();
        for (i, w) in solutions.windows(2).enumerate() {
            prop_assert!(w[1].sse <= w[0].sse * (1.0 + 1e-9), "k={} {} > {}", i + 2, w[1].sse, w[0].sse);
        }
        for (i, s) in solutions.iter().enumerate() {
            prop_assert_eq!(s.labeling.k(), i + 1);
        }
    }

    #[test]
    fn samples_are_reproducible(seed in any::<u64>(), size in 2..=60usize, balanced in any::<bool>()) {
        let (rows, labels) = random_instance(seed, 90, 2, 5);
        let data = to_dataset(&rows);
        let labels = to_labeling(&labels);
        let strategy = if balanced { Sampling::Balanced } else { Sampling::Uniform };
        let spec = SampleSpec { strategy, size, seed };
        let a = sample(&data, &labels, &spec, ReportOptions::default()).unwrap();
        let b = sample(&data, &labels, &spec, ReportOptions::default()).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.indices.len(), size);
        prop_assert_eq!(a.counts.iter().sum::<usize>(), size);
        prop_assert!(a.indices.windows(2).all(|w| w[0] < w[1]));
        if balanced {
            prop_assert_eq!(a.counts, balanced_quotas(&labels.sizes(), size));
        }
    }

    #[test]
    fn balanced_quotas_spread_evenly(sizes in proptest::collection::vec(1..50usize, 1..8), frac in 0.0..=1.0f64) {
        let total: usize = sizes.iter().sum();
        let size = ((total as f64 * frac) as usize).max(1);
        let q = balanced_quotas(&sizes, size);
        prop_assert_eq!(q.iter().sum::<usize>(), size);
        prop_assert!(q.iter().zip(&sizes).all(|(q, s)| q <= s));
        // a cluster that is not exhausted never gets fewer rows than the floor share
        for (&qc, &sc) in q.iter().zip(&sizes) {
            prop_assert!(qc == sc || qc >= size / sizes.len());
        }
    }

    #[test]
    fn noise_fraction_is_close(n in 1..2000usize, level in 0.0..0.95f64) {
        let m = noise_count(n, level).unwrap();
        let achieved = m as f64 / (m + n) as f64;
        prop_assert!((achieved - level).abs() <= 1.0 / (m + n) as f64);
    }

    #[test]
    fn estimate_k_stays_in_range(scores in proptest::collection::vec(-1.0..1.0f64, 1..30), start in 2..10usize) {
        let rows = scores
            .iter()
            .enumerate()
            .map(|(i, &s)| SweepRow { k: start + i, micro: s, macro_avg: -s, sse: 0.0 })
            .collect();
        let sweep = SweepResult::from_rows(rows).unwrap();
        for agg in [Aggregation::Micro, Aggregation::Macro] {
            let k = estimate_k(&sweep, agg);
            prop_assert!((start..start + scores.len()).contains(&k));
            prop_assert_eq!(sweep.row(k).unwrap().score(agg), sweep.max_score(agg));
        }
    }
}

#[test]
fn noisy_dataset_layout() {
    let spec = BlobSpec {
        centers: vec![vec![0.0, 0.0], vec![5.0, 5.0]],
        stddevs: vec![0.5, 0.5],
        counts: vec![300, 100],
        seed: 4,
    };
    let (data, labels) = generate_blobs(&spec).unwrap();
    for level in [0.0, 0.1, 0.25, 0.5, 0.75] {
        let noisy = add_background_noise(
            &data,
            &labels,
            &NoiseSpec {
                level,
                bounds: None,
                seed: 1,
            },
        )
        .unwrap();
        let m = noisy.noise_count();
        assert_eq!(noisy.data.len(), data.len() + m);
        assert!((m as f64 / noisy.data.len() as f64 - level).abs() <= 1.0 / noisy.data.len() as f64);
        assert_eq!(&noisy.data.as_slice()[..data.as_slice().len()], data.as_slice());
        let truth = noisy.data.truth().unwrap();
        assert!(truth[data.len()..].iter().all(|&t| t == -1));
        assert!(noisy.is_noise[data.len()..].iter().all(|&b| b));
    }
}

#[test]
fn generation_is_reproducible_and_growth_preserves_rows() {
    let spec = BlobSpec {
        centers: vec![vec![0.0, 0.0, 0.0], vec![3.0, 0.0, 1.0], vec![0.0, 4.0, 2.0]],
        stddevs: vec![0.3, 0.6, 0.1],
        counts: vec![20, 30, 40],
        seed: 9,
    };
    let (a, la) = generate_blobs(&spec).unwrap();
    let (b, _) = generate_blobs(&spec).unwrap();
    assert_eq!(a.as_slice(), b.as_slice());
    let (grown, lg) = grow_nucleus(&a, &la, 2, 500, 0.1, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(&grown.as_slice()[..a.as_slice().len()], a.as_slice());
    assert_eq!(lg.sizes(), vec![20, 30, 540]);
}
