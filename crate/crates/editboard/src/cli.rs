//! Command-line interface.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use editboard_core::alignment::generate_pairs;
use editboard_core::fidelity::{DEFAULT_EPSILON_FLOW, DEFAULT_SIGMA, DEFAULT_THETA};
use editboard_core::{Metric, MetricConfig};

use crate::align::{analyze_store, read_groups, MetricTable};
use crate::registry::{backend_dir, LoadedBackends, RegistryConfig, RegistryError};
use crate::report::{self, RADAR_JSON, TRANSCRIPT_CSV, TRANSCRIPT_JSON};
use crate::run::{run_suite, write_outputs};
use crate::server::{serve, AppState};
use crate::store::VoteStore;
use crate::suite::load_suite;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_BACKEND: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "editboard", version, about = "Evaluate text-driven video edits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate every case of a suite manifest.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THETA)]
        theta: f64,
        #[arg(long, default_value_t = DEFAULT_SIGMA)]
        sigma: f64,
        #[arg(long, default_value_t = DEFAULT_EPSILON_FLOW)]
        epsilon_flow: f64,
        /// Keep negative similarities in the consistency metrics.
        #[arg(long)]
        no_clamp: bool,
        #[arg(long)]
        backend_dir: Option<PathBuf>,
        #[arg(long)]
        mock_backends: bool,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long)]
        dump_detail: bool,
        /// Directory for cached flow fields.
        #[arg(long)]
        flow_cache: Option<PathBuf>,
    },
    /// Export a transcript from an evaluation output directory.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Also write radar plot data to `radar.json`.
        #[arg(long)]
        radar: bool,
        /// Output file; defaults to `transcript.csv` or `transcript.json` in the results directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a small synthetic suite (two cases per task).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "synthetic-editor")]
        model_name: String,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 6)]
        frames: usize,
    },
    /// Generate comparison tasks and create a vote store.
    AlignPairs {
        #[arg(long)]
        groups: PathBuf,
        #[arg(long)]
        store: PathBuf,
        /// Comma-separated metric keys; all nine by default.
        #[arg(long, value_delimiter = ',')]
        dimensions: Vec<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Serve the annotation API.
    AlignServe {
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        media: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Evaluation output directories used by /api/results.
        #[arg(long)]
        metrics: Vec<PathBuf>,
        /// Indistinguishability threshold, `metric=value`.
        #[arg(long)]
        delta: Vec<String>,
    },
    /// Compute matching rate and Pearson correlation per dimension.
    AlignAnalyze {
        #[arg(long)]
        store: PathBuf,
        #[arg(long, required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        delta: Vec<String>,
    },
}

pub struct CliError {
    pub code: u8,
    pub error: anyhow::Error,
}

trait Code<T> {
    fn code(self, code: u8) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> Code<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, CliError> {
        self.map_err(|e| CliError {
            code,
            error: e.into(),
        })
    }
}

fn parse_metrics(keys: &[String]) -> anyhow::Result<Vec<Metric>> {
    if keys.is_empty() {
        return Ok(Metric::ALL.to_vec());
    }
    keys.iter()
        .map(|k| k.trim().parse::<Metric>().map_err(|e| anyhow!("{e}")))
        .collect()
}

fn parse_deltas(specs: &[String]) -> anyhow::Result<BTreeMap<Metric, f64>> {
    specs
        .iter()
        .map(|s| {
            let (k, v) = s.split_once('=').ok_or_else(|| anyhow!("expected metric=value, got '{s}'"))?;
            let m: Metric = k.trim().parse().map_err(|e| anyhow!("{e}"))?;
            let d: f64 = v.trim().parse().with_context(|| format!("bad delta '{v}'"))?;
            if !(d >= 0.0) {
                return Err(anyhow!("delta must be non-negative, got {d}"));
            }
            Ok((m, d))
        })
        .collect()
}

fn load_backends(mock: bool, dir: Option<PathBuf>) -> Result<LoadedBackends, RegistryError> {
    if mock {
        return Ok(LoadedBackends::mock());
    }
    let dir = backend_dir(dir.as_deref()).ok_or(RegistryError::NotConfigured)?;
    LoadedBackends::from_config(&RegistryConfig::read(&dir)?)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Evaluate {
            manifest,
            out,
            theta,
            sigma,
            epsilon_flow,
            no_clamp,
            backend_dir,
            mock_backends,
            workers,
            dump_detail,
            flow_cache,
        } => {
            let config = MetricConfig {
                theta,
                sigma,
                epsilon_flow,
                clamp_negative_similarity: !no_clamp,
                ..MetricConfig::default()
            };
            config.validate().code(EXIT_VALIDATION)?;
            let suite = load_suite(&manifest).code(EXIT_VALIDATION)?;
            for w in &suite.warnings {
                log::warn!("{w}");
            }
            let mut backends = load_backends(mock_backends, backend_dir).code(EXIT_BACKEND)?;
            if let Some(dir) = flow_cache {
                backends = backends.with_flow_cache(&dir);
            }
            let result = run_suite(&suite, &backends, &config, workers).code(EXIT_FAILURE)?;
            write_outputs(&out, &result, dump_detail).code(EXIT_FAILURE)?;
            log::info!(
                "{} case(s) evaluated, {} failed; transcript at {}",
                result.results.len(),
                result.failures.len(),
                out.join(TRANSCRIPT_JSON).display()
            );
            if !result.failures.is_empty() {
                return Err(anyhow!("{} case(s) could not be evaluated", result.failures.len())).code(EXIT_VALIDATION);
            }
            Ok(())
        }
        Command::Report {
            results,
            format,
            radar,
            out,
        } => {
            let t = report::load_transcript(&results).code(EXIT_VALIDATION)?;
            let (bytes, default_name) = match format {
                Format::Csv => (report::transcript_csv(&t).code(EXIT_FAILURE)?, TRANSCRIPT_CSV),
                Format::Json => (report::to_json(&t), TRANSCRIPT_JSON),
            };
            let path = out.unwrap_or_else(|| results.join(default_name));
            report::write_atomic(&path, &bytes).code(EXIT_FAILURE)?;
            println!("{}", path.display());
            if radar {
                let rp = results.join(RADAR_JSON);
                report::write_json(&rp, &report::radar(&t)).code(EXIT_FAILURE)?;
                println!("{}", rp.display());
            }
            Ok(())
        }
        Command::Synth {
            out,
            model_name,
            size,
            frames,
        } => {
            if size < 8 || frames < 2 {
                return Err(anyhow!("need size >= 8 and frames >= 2")).code(EXIT_VALIDATION);
            }
            let path = crate::demo::write_demo_suite(&out, &model_name, size, frames).code(EXIT_FAILURE)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::AlignPairs {
            groups,
            store,
            dimensions,
            seed,
        } => {
            let dims = parse_metrics(&dimensions).code(EXIT_VALIDATION)?;
            let g = read_groups(&groups).code(EXIT_VALIDATION)?;
            let tasks = generate_pairs(&g.groups, &dims, seed).code(EXIT_VALIDATION)?;
            VoteStore::create(&store, &tasks).code(EXIT_VALIDATION)?;
            println!("{} comparison task(s) written to {}", tasks.len(), store.display());
            Ok(())
        }
        Command::AlignServe {
            store,
            media,
            port,
            metrics,
            delta,
        } => {
            let deltas = parse_deltas(&delta).code(EXIT_VALIDATION)?;
            let s = VoteStore::open(&store).code(EXIT_VALIDATION)?;
            let table = MetricTable::load(&metrics).code(EXIT_VALIDATION)?;
            let state = AppState::new(s, media, table, deltas);
            let rt = tokio::runtime::Runtime::new().code(EXIT_FAILURE)?;
            rt.block_on(serve(state, port)).code(EXIT_FAILURE)
        }
        Command::AlignAnalyze {
            store,
            metrics,
            out,
            delta,
        } => {
            let deltas = parse_deltas(&delta).code(EXIT_VALIDATION)?;
            let s = VoteStore::open(&store).code(EXIT_VALIDATION)?;
            let table = MetricTable::load(&metrics).code(EXIT_VALIDATION)?;
            let report = analyze_store(&s.snapshot(), &table, &deltas);
            report::write_json(&out, &report).code(EXIT_FAILURE)?;
            println!("{}", out.display());
            Ok(())
        }
    }
}
