mod experiment;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use experiment::{Cluster, Experiment, Format, GenBlobs, GenNoise, Input, Layout, Method, Score, Sweep};
use silkit::clustering::KMeansConfig;
use silkit::experiments::{LatticeSpec, NoiseStudyConfig, NucleusStudyConfig, SampleStudyConfig, SquareBlobs};
use silkit::kselect::{Scoring, SweepConfig};
use silkit::sampling::{SampleSpec, Strategy};
use silkit::synth::KeptLabel;
use silkit::{Aggregation, ReportOptions};

/// Micro- and macro-averaged silhouette analysis.
///
/// Every output begins with the resolved configuration (a `# ` line in CSV,
/// a "config" key in JSON); `silkit rerun FILE` regenerates the file from it.
#[derive(Parser)]
#[command(name = "silkit", version)]
struct Cli {
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Write the output here instead of stdout.
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,

    /// Output format; reports default to json, everything else to csv.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset.
    #[command(subcommand)]
    Gen(Gen),
    /// Silhouette report of a labeled dataset, optionally on a subsample.
    Score(ScoreArgs),
    /// Cluster a dataset with k-means.
    Cluster(ClusterArgs),
    /// Cluster for every k in a range and score each solution.
    Sweep(SweepArgs),
    /// Scores of the true and a randomised labeling as the nucleus grows.
    NucleusStudy(NucleusStudyArgs),
    /// Estimated number of clusters on four blobs under increasing noise.
    NoiseStudy(NoiseStudyArgs),
    /// Repeated uniform and balanced subsampling of the imbalanced lattice.
    SampleStudy(SampleStudyArgs),
    /// Regenerate an output file from its recorded configuration.
    Rerun {
        file: PathBuf,
        /// Where the sample study's summary goes, if the file came from one.
        #[arg(long)]
        summary_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SeedArg {
    /// Base seed. The SIL_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SeedArg {
    fn resolve(&self) -> Result<u64> {
        match std::env::var("SIL_SEED") {
            Ok(v) => v
                .trim()
                .parse()
                .with_context(|| format!("SIL_SEED='{v}' is not an unsigned integer")),
            Err(std::env::VarError::NotPresent) => Ok(self.seed),
            Err(e) => Err(e.into()),
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Dataset CSV.
    #[arg(long, short)]
    input: PathBuf,
    /// TOML column schema; enables imputation, one-hot encoding and min-max scaling.
    #[arg(long)]
    schema: Option<PathBuf>,
}

impl InputArgs {
    fn resolve(&self) -> Input {
        Input {
            path: self.input.clone(),
            schema: self.schema.clone(),
        }
    }
}

#[derive(Args)]
struct KMeansArgs {
    #[arg(long, default_value_t = 300)]
    max_iters: usize,
    /// Relative SSE improvement below which Lloyd iterations stop.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Candidate centers tried per global k-means++ stage.
    #[arg(long, default_value_t = 10)]
    candidates: usize,
}

impl KMeansArgs {
    fn resolve(&self, k: usize, seed: u64) -> KMeansConfig {
        KMeansConfig {
            k,
            max_iters: self.max_iters,
            tol: self.tol,
            seed,
            n_candidates: self.candidates,
        }
    }
}

#[derive(Args)]
struct SampleArgs {
    /// Score a subsample of this many points instead of the whole dataset.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value = "balanced")]
    strategy: Strategy,
}

impl SampleArgs {
    fn resolve(&self, seed: u64) -> Option<SampleSpec> {
        self.sample.map(|size| SampleSpec {
            strategy: self.strategy,
            size,
            seed,
        })
    }
}

#[derive(Subcommand)]
enum Gen {
    /// Gaussian blobs, optionally with an enlarged nucleus.
    Blobs {
        #[arg(long, value_enum, default_value = "lattice")]
        layout: Layout,
        /// Number of blobs, nucleus included.
        #[arg(long)]
        k: usize,
        /// Points per blob.
        #[arg(long)]
        n: usize,
        /// Extra points added to the nucleus (lattice layout).
        #[arg(long, default_value_t = 0)]
        nucleus_extra: usize,
        /// Lattice spacing, or the square's side.
        #[arg(long, default_value_t = 10.0)]
        spacing: f64,
        /// Blob stddev (square layout).
        #[arg(long, default_value_t = 1.0)]
        stddev: f64,
        /// Smallest lattice blob stddev.
        #[arg(long, default_value_t = 0.2)]
        std_min: f64,
        /// Largest lattice blob stddev.
        #[arg(long, default_value_t = 2.0)]
        std_max: f64,
        #[arg(long, default_value_t = 0.05)]
        nucleus_std: f64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Append uniform background noise to a dataset; noise rows get label -1.
    Noise {
        #[command(flatten)]
        input: InputArgs,
        /// Fraction of the result that is noise, in [0, 1).
        #[arg(long)]
        level: f64,
        /// Noise range LOW,HIGH used in every dimension; defaults to the
        /// bounding box padded by 10% per side.
        #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
        noise_box: Option<(f64, f64)>,
        #[command(flatten)]
        seed: SeedArg,
    },
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    input: InputArgs,
    /// One integer label per line; defaults to the dataset's label column.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[command(flatten)]
    sample: SampleArgs,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "global")]
    method: Method,
    #[command(flatten)]
    kmeans: KMeansArgs,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 30)]
    k_max: usize,
    #[command(flatten)]
    kmeans: KMeansArgs,
    #[command(flatten)]
    sample: SampleArgs,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args)]
struct NucleusStudyArgs {
    /// Nucleus sizes, strictly increasing.
    #[arg(long, value_delimiter = ',', default_value = "100,500,1000,2000,5000,10000")]
    sizes: Vec<usize>,
    /// Whether randomised points may also receive the nucleus label.
    #[arg(long, default_value = "reserved", value_parser = parse_policy)]
    policy: KeptLabel,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args)]
struct NoiseStudyArgs {
    /// Noise fractions.
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4,0.5")]
    levels: Vec<f64>,
    #[arg(long, default_value_t = 30)]
    k_max: usize,
    /// Noise range LOW,HIGH in both dimensions.
    #[arg(long, value_parser = parse_pair, default_value = "-10,20", allow_hyphen_values = true)]
    noise_box: (f64, f64),
    #[command(flatten)]
    kmeans: KMeansArgs,
    #[command(flatten)]
    seed: SeedArg,
}

#[derive(Args)]
struct SampleStudyArgs {
    /// Sample sizes.
    #[arg(long, value_delimiter = ',', default_value = "50,100,200,400,800")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 30)]
    runs: usize,
    #[arg(long, default_value_t = 10_000)]
    nucleus_size: usize,
    #[arg(long, default_value = "macro")]
    aggregation: Aggregation,
    /// Where the per-size summary CSV goes.
    #[arg(long)]
    summary_out: Option<PathBuf>,
    #[command(flatten)]
    seed: SeedArg,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected LOW,HIGH")?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn parse_policy(s: &str) -> std::result::Result<KeptLabel, String> {
    match s {
        "shared" => Ok(KeptLabel::Shared),
        "reserved" => Ok(KeptLabel::Reserved),
        other => Err(format!("unknown policy '{other}' (expected shared|reserved)")),
    }
}

fn lattice(seed: u64) -> LatticeSpec {
    LatticeSpec {
        seed,
        ..LatticeSpec::default()
    }
}

/// Turns command-line arguments into a fully resolved experiment. Seeds of
/// the studies are derived from the base seed `s`: data `s`, nucleus growth
/// `s + 1`, relabeling and subsampling `s + 2`, noise `s + 1000 + level`.
fn resolve(command: Command) -> Result<(Experiment, Option<PathBuf>)> {
    let exp = match command {
        Command::Gen(Gen::Blobs {
            layout,
            k,
            n,
            nucleus_extra,
            spacing,
            stddev,
            std_min,
            std_max,
            nucleus_std,
            seed,
        }) => Experiment::GenBlobs(GenBlobs {
            layout,
            k,
            n,
            nucleus_extra,
            spacing,
            stddev,
            std_min,
            std_max,
            nucleus_std,
            seed: seed.resolve()?,
        }),
        Command::Gen(Gen::Noise {
            input,
            level,
            noise_box,
            seed,
        }) => Experiment::GenNoise(GenNoise {
            input: input.resolve(),
            level,
            noise_box,
            seed: seed.resolve()?,
        }),
        Command::Score(a) => Experiment::Score(Score {
            input: a.input.resolve(),
            labels: a.labels,
            sample: a.sample.resolve(a.seed.resolve()?),
            report: ReportOptions::default(),
        }),
        Command::Cluster(a) => Experiment::Cluster(Cluster {
            input: a.input.resolve(),
            method: a.method,
            kmeans: a.kmeans.resolve(a.k, a.seed.resolve()?),
        }),
        Command::Sweep(a) => {
            let seed = a.seed.resolve()?;
            Experiment::Sweep(Sweep {
                input: a.input.resolve(),
                sweep: SweepConfig {
                    k_min: a.k_min,
                    k_max: a.k_max,
                    kmeans: a.kmeans.resolve(a.k_min, seed),
                    scoring: a.sample.resolve(seed).map_or(Scoring::Full, Scoring::Sampled),
                    report: ReportOptions::default(),
                },
            })
        }
        Command::NucleusStudy(a) => {
            let seed = a.seed.resolve()?;
            Experiment::NucleusStudy(NucleusStudyConfig {
                lattice: lattice(seed),
                sizes: a.sizes,
                randomize_seed: seed.wrapping_add(2),
                policy: a.policy,
                report: ReportOptions::default(),
            })
        }
        Command::NoiseStudy(a) => {
            let seed = a.seed.resolve()?;
            let defaults = NoiseStudyConfig::default();
            Experiment::NoiseStudy(NoiseStudyConfig {
                blobs: SquareBlobs {
                    seed,
                    ..SquareBlobs::default()
                },
                levels: a.levels,
                noise_bounds: Some(vec![a.noise_box; 2]),
                noise_seed: seed.wrapping_add(1000),
                sweep: SweepConfig {
                    k_max: a.k_max,
                    kmeans: a.kmeans.resolve(defaults.sweep.kmeans.k, seed),
                    ..defaults.sweep
                },
            })
        }
        Command::SampleStudy(a) => {
            let seed = a.seed.resolve()?;
            let mut cfg = SampleStudyConfig {
                lattice: lattice(seed),
                nucleus_size: a.nucleus_size,
                ..SampleStudyConfig::default()
            };
            cfg.study.sizes = a.sizes;
            cfg.study.runs = a.runs;
            cfg.study.aggregation = a.aggregation;
            cfg.study.seed = seed.wrapping_add(2);
            return Ok((Experiment::SampleStudy(cfg), a.summary_out));
        }
        Command::Rerun { .. } => unreachable!("handled by the caller"),
    };
    Ok((exp, None))
}

fn write(path: Option<&PathBuf>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }

    let (experiment, format, summary_out) = match cli.command {
        Command::Rerun { file, summary_out } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let (experiment, recorded) = experiment::from_output(&text)?;
            if cli.format.is_some_and(|f| f != recorded) {
                bail!("rerun keeps the recorded format ({recorded:?})");
            }
            (experiment, recorded, summary_out)
        }
        command => {
            let (experiment, summary_out) = resolve(command)?;
            let format = cli.format.unwrap_or_else(|| experiment.default_format());
            (experiment, format, summary_out)
        }
    };

    let rendered = experiment.run(format)?;
    write(cli.out.as_ref(), &rendered.main)?;
    if let (Some(path), Some(summary)) = (summary_out.as_ref(), rendered.summary.as_ref()) {
        write(Some(path), summary)?;
    }
    for note in &rendered.notes {
        eprintln!("{note}");
    }
    Ok(())
}
