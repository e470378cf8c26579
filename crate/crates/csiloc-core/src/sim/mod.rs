//! Trajectory simulation: seeded routes, measurement-rate subsampling,
//! fingerprint association, noise injection, end-to-end experiment runs and
//! their mean-error report grids.

mod experiment;
mod noise;
mod report;
mod route;

pub use experiment::{
    associate_csi, calibrate_measurement_noise, mean_feature_rows, run_experiment,
    ExperimentSetup, HynnPredictor, Predictor, RunResult, TraceRow, DEFAULT_NEIGHBOURS,
    MIN_MEASUREMENT_VARIANCE,
};
pub use noise::{add_noise, NoiseInjector, NoiseLevel, NoiseSpec};
pub use report::{build_report, CellKey, EvalReport, ReportCell};
pub use route::{
    generate_route, subsample, FpsTable, Route, RouteKind, DEFAULT_TIMESTEP_S, ROUTE_FRAME_MM,
};

use alloc::boxed::Box;
use core::fmt;

use crate::image::ImageError;
use crate::kalman::KalmanError;
use crate::nn::NnError;

/// Errors raised while generating routes or running experiments.
#[derive(Clone, Debug, PartialEq)]
pub enum SimError {
    /// A generated route left the configured bounds.
    OutOfBounds { x: f64, y: f64 },
    /// A route failed internal consistency checks.
    BadRoute { what: &'static str },
    /// A caller-supplied parameter was out of range.
    BadParameter { what: &'static str },
    /// The measurement-rate table has no entry for this antenna count.
    UnknownAntennaCount { antennas: usize },
    /// Association against an empty fingerprint table.
    EmptyTable,
    /// Fewer neighbours requested than the supported minimum.
    KTooSmall { k: usize },
    /// More neighbours requested than the table holds.
    KExceedsRows { k: usize, rows: usize },
    /// A feature row and the per-column range list disagree in width.
    RangeMissing { expected: usize, got: usize },
    /// A report grid is missing the named cell.
    IncompleteGrid { noise: &'static str, kalman: bool, antennas: usize },
    /// A report grid received two values for the named cell.
    DuplicateCell { noise: &'static str, kalman: bool, antennas: usize },
    /// A report cell value was negative or non-finite.
    BadCell { noise: &'static str, kalman: bool, antennas: usize },
    /// A failure at one step of an experiment run.
    AtStep { step: usize, source: Box<SimError> },
    /// An image-pipeline failure.
    Image(ImageError),
    /// A network failure.
    Nn(NnError),
    /// A tracking-filter failure.
    Kalman(KalmanError),
}

impl SimError {
    /// Tag an error with the experiment step it occurred at.
    pub fn at_step(self, step: usize) -> SimError {
        SimError::AtStep { step, source: Box::new(self) }
    }
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::OutOfBounds { x, y } => {
                write!(f, "route point ({x:.1}, {y:.1}) mm lies outside the configured bounds")
            }
            SimError::BadRoute { what } => write!(f, "inconsistent route: {what}"),
            SimError::BadParameter { what } => write!(f, "bad parameter: {what}"),
            SimError::UnknownAntennaCount { antennas } => {
                write!(f, "no measurement rate configured for {antennas} antennas")
            }
            SimError::EmptyTable => write!(f, "fingerprint table is empty"),
            SimError::KTooSmall { k } => {
                write!(f, "{k} neighbours requested, minimum is {DEFAULT_NEIGHBOURS}")
            }
            SimError::KExceedsRows { k, rows } => {
                write!(f, "{k} neighbours requested from a table of {rows} rows")
            }
            SimError::RangeMissing { expected, got } => {
                write!(f, "feature row has {expected} columns but {got} ranges were supplied")
            }
            SimError::IncompleteGrid { noise, kalman, antennas } => write!(
                f,
                "report grid is missing cell (noise {noise}, filter {}, {antennas} antennas)",
                if *kalman { "on" } else { "off" }
            ),
            SimError::DuplicateCell { noise, kalman, antennas } => write!(
                f,
                "report grid has duplicate cell (noise {noise}, filter {}, {antennas} antennas)",
                if *kalman { "on" } else { "off" }
            ),
            SimError::BadCell { noise, kalman, antennas } => write!(
                f,
                "report cell (noise {noise}, filter {}, {antennas} antennas) is not a \
                 finite non-negative error",
                if *kalman { "on" } else { "off" }
            ),
            SimError::AtStep { step, source } => write!(f, "at step {step}: {source}"),
            SimError::Image(e) => write!(f, "image pipeline: {e}"),
            SimError::Nn(e) => write!(f, "network: {e}"),
            SimError::Kalman(e) => write!(f, "tracking filter: {e}"),
        }
    }
}

impl core::error::Error for SimError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            SimError::AtStep { source, .. } => Some(source.as_ref()),
            SimError::Image(e) => Some(e),
            SimError::Nn(e) => Some(e),
            SimError::Kalman(e) => Some(e),
            _ => None,
        }
    }
}

impl From<ImageError> for SimError {
    fn from(e: ImageError) -> Self {
        SimError::Image(e)
    }
}

impl From<NnError> for SimError {
    fn from(e: NnError) -> Self {
        SimError::Nn(e)
    }
}

impl From<KalmanError> for SimError {
    fn from(e: KalmanError) -> Self {
        SimError::Kalman(e)
    }
}
