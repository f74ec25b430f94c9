//! Resolved experiment configurations and their execution.
//!
//! Every output file starts with the serialized [`Experiment`] that produced
//! it, which is all `rerun` needs to regenerate the file.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;

use silkit::clustering::{global_kmeanspp, kmeans, KMeansConfig};
use silkit::experiments::{
    noise_study, nucleus_study, sample_study, LatticeSpec, NoiseStudyConfig, NucleusStudyConfig, SampleStudyConfig,
    SquareBlobs,
};
use silkit::ingest::{load_dataset, read_dataset_csv, write_dataset_csv, ColumnSchema};
use silkit::kselect::{sweep, SweepConfig, SweepResult};
use silkit::sampling::{sample, SampleSpec};
use silkit::synth::{add_background_noise, NoiseSpec};
use silkit::{full_report, Dataset, Labeling, ReportOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// A dataset on disk. Without a schema the file is read as written by `gen`
/// (numeric columns, optional trailing `label`); with one it goes through
/// imputation, one-hot encoding and min-max scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Input {
    pub path: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<PathBuf>,
}

impl Input {
    pub fn load(&self) -> Result<Dataset> {
        let data = match &self.schema {
            Some(schema) => {
                let schema =
                    ColumnSchema::from_file(schema).with_context(|| format!("reading schema {}", schema.display()))?;
                load_dataset(&self.path, &schema)
            }
            None => read_dataset_csv(&self.path),
        };
        data.with_context(|| format!("loading {}", self.path.display()))
    }
}

fn truth_labels(data: &Dataset) -> Result<Labeling> {
    match data.truth() {
        Some(t) => Ok(Labeling::canonicalize(t)),
        None => bail!("the dataset has no label column; pass --labels"),
    }
}

fn read_labels(path: &PathBuf) -> Result<Labeling> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let raw = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.parse::<i64>()
                .with_context(|| format!("bad label '{l}' in {}", path.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Labeling::canonicalize(&raw))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    /// `k - 1` blobs on a square lattice around a tight nucleus at the origin.
    Lattice,
    /// Four equal blobs on the corners of a square.
    Square,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenBlobs {
    pub layout: Layout,
    pub k: usize,
    pub n: usize,
    pub nucleus_extra: usize,
    pub spacing: f64,
    pub stddev: f64,
    pub std_min: f64,
    pub std_max: f64,
    pub nucleus_std: f64,
    pub seed: u64,
}

impl GenBlobs {
    fn generate(&self) -> Result<Dataset> {
        match self.layout {
            Layout::Lattice => {
                if self.k < 2 {
                    bail!("the lattice layout needs k >= 2");
                }
                let spec = LatticeSpec {
                    blobs: self.k - 1,
                    spacing: self.spacing,
                    per_blob: self.n,
                    std_min: self.std_min,
                    std_max: self.std_max,
                    nucleus_std: self.nucleus_std,
                    seed: self.seed,
                };
                Ok(spec.with_nucleus_size(self.n + self.nucleus_extra)?.0)
            }
            Layout::Square => {
                if self.k != 4 || self.nucleus_extra != 0 {
                    bail!("the square layout has exactly four blobs and no nucleus");
                }
                let spec = SquareBlobs {
                    side: self.spacing,
                    stddev: self.stddev,
                    per_blob: self.n,
                    seed: self.seed,
                };
                Ok(spec.generate()?.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenNoise {
    pub input: Input,
    pub level: f64,
    /// Same `(low, high)` range in every dimension; `None` pads the bounding
    /// box by 10% per side.
    pub noise_box: Option<(f64, f64)>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Score {
    pub input: Input,
    pub labels: Option<PathBuf>,
    pub sample: Option<SampleSpec>,
    pub report: ReportOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Incremental global k-means++.
    Global,
    /// One k-means++ seeding followed by Lloyd iterations.
    Kmeanspp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cluster {
    pub input: Input,
    pub method: Method,
    pub kmeans: KMeansConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub input: Input,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Experiment {
    GenBlobs(GenBlobs),
    GenNoise(GenNoise),
    Score(Score),
    Cluster(Cluster),
    Sweep(Sweep),
    NucleusStudy(NucleusStudyConfig),
    NoiseStudy(NoiseStudyConfig),
    SampleStudy(SampleStudyConfig),
}

/// Files produced by one run. `summary` is only set by the sample study in
/// CSV mode; `notes` go to stderr.
pub struct Rendered {
    pub main: String,
    pub summary: Option<String>,
    pub notes: Vec<String>,
}

impl Experiment {
    pub fn default_format(&self) -> Format {
        match self {
            Experiment::Score(_) | Experiment::Cluster(_) => Format::Json,
            _ => Format::Csv,
        }
    }

    fn header(&self) -> Result<String> {
        Ok(format!("# {}\n", serde_json::to_string(self)?))
    }

    fn json(&self, result: serde_json::Value) -> Result<String> {
        let mut s = serde_json::to_string_pretty(&json!({ "config": self, "result": result }))?;
        s.push('\n');
        Ok(s)
    }

    pub fn run(&self, format: Format) -> Result<Rendered> {
        let mut notes = Vec::new();
        let mut summary = None;
        let main = match (self, format) {
            (Experiment::GenBlobs(_) | Experiment::GenNoise(_), Format::Json) => {
                bail!("datasets are written as CSV only")
            }
            (Experiment::Score(_) | Experiment::Cluster(_), Format::Csv) => bail!("reports are written as JSON only"),
            (Experiment::GenBlobs(cfg), Format::Csv) => {
                let data = cfg.generate()?;
                notes.push(format!("{} rows", data.len()));
                self.dataset_csv(&data)?
            }
            (Experiment::GenNoise(cfg), Format::Csv) => {
                let data = cfg.input.load()?;
                let labels = match data.truth() {
                    Some(t) => Labeling::canonicalize(t),
                    None => Labeling::from_contiguous(vec![0; data.len()])?,
                };
                let spec = NoiseSpec {
                    level: cfg.level,
                    bounds: cfg.noise_box.map(|b| vec![b; data.dim()]),
                    seed: cfg.seed,
                };
                let noisy = add_background_noise(&data, &labels, &spec)?;
                notes.push(format!("{} noise rows added", noisy.noise_count()));
                self.dataset_csv(&noisy.data)?
            }
            (Experiment::Score(cfg), Format::Json) => {
                let data = cfg.input.load()?;
                let labels = match &cfg.labels {
                    Some(path) => read_labels(path)?,
                    None => truth_labels(&data)?,
                };
                let result = match &cfg.sample {
                    None => {
                        json!({ "n": data.len(), "k": labels.k(), "report": full_report(&data, &labels, cfg.report)? })
                    }
                    Some(spec) => {
                        let drawn = sample(&data, &labels, spec, cfg.report)?;
                        if !drawn.is_defined() {
                            notes.push("sample holds a single cluster: silhouette undefined".into());
                        }
                        json!({
                            "n": data.len(),
                            "k": labels.k(),
                            "sample_counts": drawn.counts,
                            "defined": drawn.is_defined(),
                            "report": drawn.report,
                        })
                    }
                };
                self.json(result)?
            }
            (Experiment::Cluster(cfg), Format::Json) => {
                let data = cfg.input.load()?;
                let solution = match cfg.method {
                    Method::Kmeanspp => kmeans(&data, &cfg.kmeans)?,
                    Method::Global => global_kmeanspp(&data, cfg.kmeans.k, &cfg.kmeans)?
                        .pop()
                        .expect("k_max solutions"),
                };
                self.json(json!({
                    "k": solution.k(),
                    "sse": solution.sse,
                    "iterations": solution.iterations,
                    "centers": solution.centers,
                    "labels": solution.labeling.assignments(),
                }))?
            }
            (Experiment::Sweep(cfg), format) => {
                let data = cfg.input.load()?;
                let result = sweep(&data, &cfg.sweep)?;
                notes.push(format!(
                    "argmax micro k = {}, argmax macro k = {}",
                    result.argmax_micro, result.argmax_macro
                ));
                match format {
                    Format::Csv => self.sweep_csv(&result)?,
                    Format::Json => self.json(serde_json::to_value(&result)?)?,
                }
            }
            (Experiment::NucleusStudy(cfg), format) => {
                let study = nucleus_study(cfg)?;
                notes.push(format!(
                    "reference micro {}, randomised labeling overtakes it at nucleus size {}",
                    study.reference_micro,
                    study.crossing_size().map_or("(never)".into(), |s| s.to_string())
                ));
                match format {
                    Format::Json => self.json(serde_json::to_value(&study)?)?,
                    Format::Csv => {
                        let mut out = self.header()?;
                        out.push_str("nucleus_size,n,optimal_micro,optimal_macro,random_micro,random_macro\n");
                        for r in &study.rows {
                            writeln!(
                                out,
                                "{},{},{},{},{},{}",
                                r.nucleus_size, r.n, r.optimal_micro, r.optimal_macro, r.random_micro, r.random_macro
                            )?;
                        }
                        out
                    }
                }
            }
            (Experiment::NoiseStudy(cfg), format) => {
                let levels = noise_study(cfg)?;
                for l in &levels {
                    notes.push(format!(
                        "noise {:>4.1}%: micro k = {}, macro k = {}",
                        100.0 * l.level,
                        l.k_micro,
                        l.k_macro
                    ));
                }
                match format {
                    Format::Json => self.json(serde_json::to_value(&levels)?)?,
                    Format::Csv => {
                        let mut out = self.header()?;
                        out.push_str("level,noise_points,k,micro,macro,sse\n");
                        for l in &levels {
                            for r in &l.sweep.rows {
                                writeln!(
                                    out,
                                    "{},{},{},{},{},{}",
                                    l.level, l.noise_points, r.k, r.micro, r.macro_avg, r.sse
                                )?;
                            }
                        }
                        out
                    }
                }
            }
            (Experiment::SampleStudy(cfg), format) => {
                let study = sample_study(cfg)?;
                notes.push(format!(
                    "full-dataset {} score {}",
                    cfg.study.aggregation, study.full_score
                ));
                match format {
                    Format::Json => self.json(serde_json::to_value(&study)?)?,
                    Format::Csv => {
                        let mut out = self.header()?;
                        out.push_str("size,strategy,run,score,defined\n");
                        for r in &study.result.runs {
                            writeln!(
                                out,
                                "{},{},{},{},{}",
                                r.size,
                                r.strategy,
                                r.run,
                                opt(r.score),
                                r.score.is_some()
                            )?;
                        }
                        let mut sum = self.header()?;
                        sum.push_str(
                            "size,strategy,defined,undefined,median,q1,q3,whisker_low,whisker_high,full_score\n",
                        );
                        for r in &study.result.summary {
                            writeln!(
                                sum,
                                "{},{},{},{},{},{},{},{},{},{}",
                                r.size,
                                r.strategy,
                                r.defined,
                                r.undefined,
                                opt(r.median),
                                opt(r.q1),
                                opt(r.q3),
                                opt(r.whisker_low),
                                opt(r.whisker_high),
                                study.full_score
                            )?;
                        }
                        summary = Some(sum);
                        out
                    }
                }
            }
        };
        Ok(Rendered { main, summary, notes })
    }

    fn dataset_csv(&self, data: &Dataset) -> Result<String> {
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, data, &[serde_json::to_string(self)?])?;
        Ok(String::from_utf8(buf)?)
    }

    fn sweep_csv(&self, result: &SweepResult) -> Result<String> {
        let mut out = self.header()?;
        out.push_str("k,micro,macro,sse\n");
        for r in &result.rows {
            writeln!(out, "{},{},{},{}", r.k, r.micro, r.macro_avg, r.sse)?;
        }
        Ok(out)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

/// Recovers the experiment and format recorded in an output file.
pub fn from_output(text: &str) -> Result<(Experiment, Format)> {
    if text.trim_start().starts_with('{') {
        let doc: serde_json::Value = serde_json::from_str(text).context("parsing JSON output")?;
        let config = doc.get("config").context("JSON output has no \"config\" key")?;
        return Ok((serde_json::from_value(config.clone())?, Format::Json));
    }
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("# "))
        .context("no '# ' config header found")?;
    Ok((
        serde_json::from_str(line).context("parsing config header")?,
        Format::Csv,
    ))
}
