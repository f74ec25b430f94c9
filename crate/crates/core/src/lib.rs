//! Silhouette-based cluster validation.
//!
//! Per-point silhouette scores can be folded into one number per dataset in
//! two ways: the micro average (every point counts once) and the macro
//! average (every cluster counts once). This crate computes both, draws
//! cluster-balanced subsamples for large inputs, clusters with global
//! k-means++ and selects the number of clusters by maximum silhouette.

pub mod clustering;
pub mod data;
pub mod error;
pub mod experiments;
pub mod ingest;
pub mod kselect;
pub mod sampling;
pub mod silhouette;
pub mod synth;

pub use data::{
    dataset_stats, distances_from_point, pairwise_distances, Dataset, DatasetStats, DistanceMatrix, Labeling, Metric,
};
pub use error::{Error, Result};
pub use silhouette::{full_report, Aggregation, ReportOptions, SilhouetteReport};
