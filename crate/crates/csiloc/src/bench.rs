//! Single-sample inference latency measurement.
//!
//! Times the full per-fix prediction — both per-axis networks on one
//! rendered image plus feature row — and derives the whole-predictions-per-
//! second rate that route subsampling consumes. Timings are hardware facts,
//! so the output is advisory: users may copy the measured rates into the
//! config's `fps.entries`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use csiloc_core::image::SyntheticImage;
use csiloc_core::nn::{predict_position, HynnParams};

use crate::error::CliError;

/// Latency summary for one antenna count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchEntry {
    pub antennas: usize,
    pub min_s: f64,
    pub median_s: f64,
    pub max_s: f64,
    /// Whole predictions per second at the median latency.
    pub fps: u32,
}

/// The full measurement report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    /// Timed inferences per antenna count.
    pub iterations: usize,
    pub entries: Vec<BenchEntry>,
}

/// Time `iterations` single-sample inferences of one model pair.
pub fn bench_pair(
    antennas: usize,
    model_x: &HynnParams,
    model_y: &HynnParams,
    image: &SyntheticImage,
    features: &[f64],
    iterations: usize,
) -> Result<BenchEntry, CliError> {
    let mut samples_s = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let started = Instant::now();
        let prediction = predict_position(model_x, model_y, image, features)
            .map_err(|e| CliError::core(format!("inference at {antennas} antennas"), e))?;
        samples_s.push(started.elapsed().as_secs_f64());
        // Keep the result observable so the measured call is not dead code.
        std::hint::black_box(prediction);
    }
    samples_s.sort_by(|a, b| a.total_cmp(b));
    let min_s = samples_s[0];
    let max_s = samples_s[samples_s.len() - 1];
    let median_s = median_of_sorted(&samples_s);
    Ok(BenchEntry { antennas, min_s, median_s, max_s, fps: derive_fps(median_s) })
}

/// Whole predictions per second: `floor(1 / median)`, at least 1.
pub fn derive_fps(median_s: f64) -> u32 {
    if !(median_s > 0.0) {
        // Sub-resolution timings: the clock saw no elapsed time at all.
        return u32::MAX;
    }
    ((1.0 / median_s).floor() as u32).max(1)
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}
