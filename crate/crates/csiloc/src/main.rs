//! Command-line entry point: parse arguments, resolve the config, and
//! dispatch to the pipeline stage behind each subcommand.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use csiloc::config::{IngestConfig, PipelineConfig};
use csiloc::error::CliError;
use csiloc::pipeline::{self, Stage};

#[derive(Parser)]
#[command(
    name = "csiloc",
    version,
    about = "Indoor localisation from massive-MIMO channel state information"
)]
struct Cli {
    /// TOML config file (default: ./csiloc.toml if present, else built-in defaults).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding the config's `out_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesise (or ingest) the fingerprint table and start a fresh manifest.
    GenData {
        /// CSV of externally captured fingerprints to ingest instead of synthesising.
        #[arg(long, value_name = "CSV", requires = "ingest_descriptor")]
        ingest_data: Option<PathBuf>,
        /// JSON descriptor declaring the CSV's shape, encoding, and column order.
        #[arg(long, value_name = "JSON", requires = "ingest_data")]
        ingest_descriptor: Option<PathBuf>,
    },
    /// Train the per-axis model pair for every configured antenna count.
    Train {
        /// Also dump the first N training images per antenna count as PNGs.
        #[arg(long, value_name = "N", default_value_t = 0)]
        dump_images: usize,
    },
    /// Measure single-sample inference latency per antenna count.
    Bench {
        /// Timed inferences per antenna count (at least 100; default from config).
        #[arg(long, value_name = "N")]
        iterations: Option<usize>,
    },
    /// Run every configured experiment cell, writing traces and reports.
    Simulate,
    /// Merge the per-experiment reports into one document.
    Report,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = PipelineConfig::resolve(cli.config.as_deref())?;
    if let Command::GenData {
        ingest_data: Some(data),
        ingest_descriptor: Some(descriptor),
    } = &cli.command
    {
        config.ingest = Some(IngestConfig { data: data.clone(), descriptor: descriptor.clone() });
    }
    let stage = Stage::new(config, cli.out_dir);

    match cli.command {
        Command::GenData { .. } => {
            let summary = pipeline::run_gen_data(&stage)?;
            println!(
                "{} {} fingerprints ({} antennas x {} subcarriers) -> {}",
                if summary.ingested { "ingested" } else { "synthesised" },
                summary.rows,
                summary.antennas,
                summary.subcarriers,
                stage.out_dir.join(pipeline::FINGERPRINTS_FILE).display()
            );
        }
        Command::Train { dump_images } => {
            let outcomes = pipeline::run_train(&stage, dump_images)?;
            for outcome in &outcomes {
                println!(
                    "trained {:>3} antennas: test mean error {:.1} mm ({} + {} epochs)",
                    outcome.antennas, outcome.test_me_mm, outcome.epochs_x, outcome.epochs_y
                );
            }
            println!("wrote {}", stage.out_dir.join(pipeline::METRICS_FILE).display());
        }
        Command::Bench { iterations } => {
            let report = pipeline::run_bench(&stage, iterations)?;
            for entry in &report.entries {
                println!(
                    "{:>3} antennas: min {:.3} ms / median {:.3} ms / max {:.3} ms -> {} FPS",
                    entry.antennas,
                    entry.min_s * 1e3,
                    entry.median_s * 1e3,
                    entry.max_s * 1e3,
                    entry.fps
                );
            }
            println!("wrote {}", stage.out_dir.join(pipeline::BENCH_FILE).display());
        }
        Command::Simulate => {
            let summary = pipeline::run_simulate(&stage)?;
            for report in &summary.reports {
                println!(
                    "experiment {} ({}): {} cells",
                    report.kind.experiment_number(),
                    report.kind.label(),
                    report.cells.len()
                );
            }
            println!("wrote {} traces under {}", summary.traces, stage.out_dir.display());
        }
        Command::Report => {
            let reports = pipeline::run_report(&stage)?;
            println!(
                "merged {} experiment reports -> {}",
                reports.len(),
                stage.out_dir.join(pipeline::MERGED_REPORT_CSV).display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            // Walk the cause chain, skipping messages the parent already embeds.
            let mut shown = error.to_string();
            let mut source = std::error::Error::source(&error);
            while let Some(cause) = source {
                let text = cause.to_string();
                if !shown.contains(&text) {
                    eprintln!("  caused by: {text}");
                }
                shown = text;
                source = cause.source();
            }
            ExitCode::from(error.exit_code())
        }
    }
}
