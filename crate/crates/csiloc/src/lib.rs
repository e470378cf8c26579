//! Command-line pipeline around [`csiloc_core`]: configuration, file
//! formats, artifact integrity, and the five stage commands (data
//! generation/ingestion, training, latency benchmarking, simulation,
//! report merging).
//!
//! The binary in `main.rs` is a thin argument parser over [`pipeline`];
//! everything below it is a library so integration tests can drive the
//! stages in-process.

pub mod bench;
pub mod config;
pub mod error;
pub mod ingest;
pub mod io;
pub mod pipeline;

pub use config::PipelineConfig;
pub use error::CliError;
