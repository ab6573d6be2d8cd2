//! Argument parsing and subcommand dispatch.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use crate::config::PartialConfig;
use crate::error::UsageError;
use crate::pipeline::{
    eigen_stage, ingest_stage, load, network_stage, run_all, stats_stage, with_writer, InputSource,
    OutputOptions,
};

#[derive(Debug, Parser)]
#[command(
    name = "eigencorpus",
    version,
    about = "Eigenimages and correlation networks for image corpora"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads (default: one per core). 1 is the reference path.
    #[arg(long, global = true, value_name = "K")]
    pub threads: Option<usize>,

    /// `key = value` file with RunConfig fields; flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub settings: SettingArgs,
}

/// Flags mirroring the `RunConfig` fields.
#[derive(Debug, Clone, Default, Args)]
pub struct SettingArgs {
    /// Side of the square center crop in pixels [default: 550].
    #[arg(long = "crop", global = true, value_name = "PX")]
    pub crop_size: Option<usize>,
    /// Total-correlation edge threshold, inclusive [default: 0.027].
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Spread multiplier for the bound images [default: 1.96].
    #[arg(long, global = true)]
    pub scale: Option<f64>,
    /// Spread used for the bound images: variance or stddev [default: variance].
    #[arg(long = "spread", global = true, value_name = "MODE")]
    pub spread_mode: Option<String>,
    /// Variance divisor: population (N) or sample (N-1) [default: population].
    #[arg(long, global = true)]
    pub divisor: Option<String>,
    /// Eigenimages rendered per channel [default: 5].
    #[arg(long, global = true, value_name = "K")]
    pub components: Option<usize>,
    /// Network layout seed [default: 2014].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; its parent must exist [default: out].
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
}

impl From<SettingArgs> for PartialConfig {
    fn from(a: SettingArgs) -> Self {
        PartialConfig {
            crop_size: a.crop_size,
            threshold: a.threshold,
            scale: a.scale,
            spread_mode: a.spread_mode,
            divisor: a.divisor,
            components: a.components,
            seed: a.seed,
            out_dir: a.out_dir,
        }
    }
}

/// Where images come from. Exactly one source may be given.
#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    /// Tensor written by `ingest`.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["synthetic", "input_dir", "files"])]
    pub corpus: Option<PathBuf>,
    /// Generate N synthetic landscape-like images instead of reading files.
    #[arg(long, value_name = "N", conflicts_with_all = ["input_dir", "files"])]
    pub synthetic: Option<usize>,
    /// Seed for `--synthetic`.
    #[arg(long, value_name = "SEED", default_value_t = 1, requires = "synthetic")]
    pub synthetic_seed: u64,
    /// Read every JPEG/PNG in this directory, in file-name order.
    #[arg(long, value_name = "DIR", conflicts_with = "files")]
    pub input_dir: Option<PathBuf>,
    /// Image files, in corpus order.
    pub files: Vec<PathBuf>,
}

impl InputArgs {
    pub fn source(&self) -> Result<InputSource, UsageError> {
        if let Some(path) = &self.corpus {
            Ok(InputSource::Corpus(path.clone()))
        } else if let Some(count) = self.synthetic {
            Ok(InputSource::Synthetic {
                count,
                seed: self.synthetic_seed,
            })
        } else if let Some(dir) = &self.input_dir {
            Ok(InputSource::Directory(dir.clone()))
        } else if !self.files.is_empty() {
            Ok(InputSource::Files(self.files.clone()))
        } else {
            Err(UsageError(
                "no input: give image files, --input-dir, --synthetic or --corpus".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Args)]
pub struct OutputArgs {
    /// Also write JPEG renders (quality 90).
    #[arg(long)]
    pub jpeg: bool,
    /// Also write unclamped statistic planes as ECT1 tensors.
    #[arg(long)]
    pub raw: bool,
}

impl From<OutputArgs> for OutputOptions {
    fn from(a: OutputArgs) -> Self {
        OutputOptions {
            jpeg: a.jpeg,
            raw: a.raw,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode and crop images into `corpus.ect` with an `images.csv` index.
    Ingest {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Mean and lower/upper bound renders.
    Stats {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Per-channel eigenimages and explained-variance tables.
    Eigen {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Total-correlation network, centralities, isolates and bridges.
    Network {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Every stage plus a montage, into one directory.
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Executes a parsed command line; returns a one-line summary.
pub fn execute(cli: Cli) -> anyhow::Result<String> {
    let file = match &cli.config {
        Some(path) => PartialConfig::from_file(path)?,
        None => PartialConfig::default(),
    };
    let config = file.overridden_by(cli.settings.into()).resolve()?;
    if cli.threads == Some(0) {
        return Err(UsageError("--threads must be at least 1".into()).into());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .context("starting worker threads")?;
    let out_dir = config.out_dir.display().to_string();
    let summary =
        |what: &str, files: usize| format!("{what}: wrote {files} artifacts to {out_dir}");

    pool.install(|| match cli.command {
        Command::Ingest { input } => {
            let source = input.source()?;
            let (n, manifest) = with_writer(&config, |out| {
                let loaded = load(&source, config.crop_size)?;
                ingest_stage(&loaded, out)?;
                Ok(loaded.corpus.len())
            })?;
            Ok(summary(&format!("ingest ({n} images)"), manifest.len()))
        }
        Command::Stats { input, output } => {
            let source = input.source()?;
            let ((), manifest) = with_writer(&config, |out| {
                let loaded = load(&source, config.crop_size)?;
                stats_stage(&loaded.corpus, &config, &output.into(), out)
            })?;
            Ok(summary("stats", manifest.len()))
        }
        Command::Eigen { input, output } => {
            let source = input.source()?;
            let (_, manifest) = with_writer(&config, |out| {
                let loaded = load(&source, config.crop_size)?;
                eigen_stage(&loaded.corpus, &config, &output.into(), out)
            })?;
            Ok(summary("eigen", manifest.len()))
        }
        Command::Network { input, output } => {
            let source = input.source()?;
            let (net, manifest) = with_writer(&config, |out| {
                let loaded = load(&source, config.crop_size)?;
                network_stage(&loaded.corpus, &config, &output.into(), out)
            })?;
            Ok(summary(
                &format!(
                    "network ({} edges, {} isolates, {} bridges)",
                    net.edges,
                    net.isolates.len(),
                    net.bridges.len()
                ),
                manifest.len(),
            ))
        }
        Command::Run { input, output } => {
            let report = run_all(&config, &input.source()?, &output.into())?;
            Ok(summary(
                &format!(
                    "run ({} images, {} edges, {} isolates)",
                    report.images,
                    report.network.edges,
                    report.network.isolates.len()
                ),
                report.manifest.len(),
            ))
        }
    })
}
