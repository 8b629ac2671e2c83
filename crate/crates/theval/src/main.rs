use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use theval::correlate::{correlate_report, read_votes, CorrelateOptions, ResampleUnit};
use theval::error::Error;
use theval::evaluate::{evaluate_corpus, EvaluateOptions, EvaluationReport};
use theval::fixtures::{demo_corpus, write_corpus, CorpusSpec};
use theval::format::{facemesh_topology, load_topology, read_feature_bundle, read_json, write_json};
use theval::manifest::CorpusManifest;
use theval::service::{serve, StudyConfig};
use theval::table::read_score_table;
use theval_core::feature::{validate_bundle, FaceTopology};
use theval_core::scoring::{build_leaderboard, AggregationMode};

/// Talking-head video evaluation from extracted facial and audio features.
#[derive(Parser)]
#[command(name = "theval", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Aggregation {
    CorpusMean,
    PerVideo,
}

impl From<Aggregation> for AggregationMode {
    fn from(a: Aggregation) -> Self {
        match a {
            Aggregation::CorpusMean => AggregationMode::CorpusMean,
            Aggregation::PerVideo => AggregationMode::PerVideo,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Score every model of a corpus against its ground truth.
    Evaluate {
        #[arg(long)]
        manifest: PathBuf,
        /// Overrides the manifest's topology; the bundled 468-point layout
        /// is used when neither is given.
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Report path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value = "corpus-mean")]
        aggregation: Aggregation,
        #[arg(long)]
        overwrite: bool,
    },
    /// Rank-correlate report scores with human win rates.
    Correlate {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        votes: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        resamples: usize,
        /// Confidence level of the bootstrap interval.
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Correlate the ground truth's own row as well.
        #[arg(long)]
        include_gt: bool,
        #[arg(long, value_enum, default_value = "models")]
        resample_unit: ResampleUnit,
        #[arg(long)]
        overwrite: bool,
    },
    /// Generate a synthetic feature corpus.
    Fixtures {
        /// Corpus spec file; see the README for its shape.
        #[arg(long, required_unless_present = "demo", conflicts_with = "demo")]
        spec: Option<PathBuf>,
        /// Use the built-in six-source, three-video corpus.
        #[arg(long)]
        demo: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        overwrite: bool,
    },
    /// Check one feature directory against every invariant.
    Validate {
        dir: PathBuf,
        #[arg(long)]
        topology: Option<PathBuf>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print a leaderboard from an evaluation report or a score table (.csv).
    Leaderboard { path: PathBuf },
    /// Run the pairwise preference study service.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn topology(flag: Option<&Path>, fallback: Option<&Path>) -> anyhow::Result<FaceTopology> {
    match flag.or(fallback) {
        Some(p) => Ok(load_topology(p)?),
        None => Ok(facemesh_topology()),
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>, overwrite: bool) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            if path.exists() && !overwrite {
                return Err(Error::Exists { path: path.to_path_buf() }.into());
            }
            write_json(path, value)?;
        }
        None => println!("{}", serde_json::to_string_pretty(value)?),
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Evaluate { manifest, topology: topo_flag, out, workers, aggregation, overwrite } => {
            let m = CorpusManifest::load(&manifest)?;
            let topo = topology(topo_flag.as_deref(), m.topology.as_deref())?;
            let opts = EvaluateOptions { aggregation: aggregation.into(), workers };
            let report = evaluate_corpus(&m, &topo, &opts)?;
            for f in &report.failures {
                eprintln!("skipped {}/{}: {}", f.model, f.video_id, f.error);
            }
            emit(&report, out.as_deref(), overwrite)?;
            eprint!("{}", report.leaderboard.render_text());
        }
        Command::Correlate { report, votes, out, seed, resamples, level, include_gt, resample_unit, overwrite } => {
            let r: EvaluationReport = read_json(&report)?;
            let v = read_votes(&votes)?;
            let opts = CorrelateOptions { seed, resamples, level, include_gt, unit: resample_unit };
            let c = correlate_report(&r, &v, &opts)?;
            emit(&c, out.as_deref(), overwrite)?;
        }
        Command::Fixtures { spec, demo, out, overwrite } => {
            let spec: CorpusSpec = match spec {
                Some(p) => read_json(&p)?,
                None if demo => demo_corpus(),
                None => unreachable!("clap requires --spec or --demo"),
            };
            write_corpus(&spec, &out, overwrite)?;
            eprintln!("wrote {} source(s) to {}", spec.sources.len(), out.display());
        }
        Command::Validate { dir, topology: topo_flag, json } => {
            let topo = topology(topo_flag.as_deref(), None)?;
            let bundle = read_feature_bundle(&dir, &topo)?;
            let report = validate_bundle(&bundle, &topo);
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                for v in &report.violations {
                    println!("{v}");
                }
                println!(
                    "{}: {} frame(s), {} violation(s), {} failed detection(s)",
                    dir.display(),
                    bundle.n_frames(),
                    report.violations.len(),
                    report.failed_detections
                );
            }
            if !report.is_clean() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Leaderboard { path } => {
            let board = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
                let rows = read_score_table(&path)?;
                for r in &rows {
                    if let Some(p) = r.printed_final {
                        if (p - r.card.final_score).abs() > 5e-4 {
                            eprintln!(
                                "{}: printed final score {p} differs from the mean of its metrics {:.4}",
                                r.card.model_id, r.card.final_score
                            );
                        }
                    }
                }
                build_leaderboard(&rows.into_iter().map(|r| r.card).collect::<Vec<_>>())
            } else {
                let report: EvaluationReport = read_json(&path)?;
                report.leaderboard
            };
            print!("{}", board.render_text());
        }
        Command::Serve { config, port, seed } => {
            let mut cfg = StudyConfig::load(&config)?;
            if let Some(p) = port {
                cfg.port = p;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let rt = tokio::runtime::Runtime::new().context("starting the async runtime")?;
            rt.block_on(serve(cfg))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
