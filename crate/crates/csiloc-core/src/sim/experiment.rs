//! The timed evaluation loop: look up CSI near the true position, perturb
//! it, render, predict, filter, and score.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::noise::{NoiseInjector, NoiseSpec};
use super::route::{generate_route, subsample, FpsTable, RouteKind};
use super::SimError;
use crate::csi::wrap_angle;
use crate::geom::{mean_error, Bounds, PointMm};
use crate::image::{render, BlurSpec, FeatureLayout, SyntheticImage};
use crate::kalman::{run_filter, KalmanConfig};
use crate::nn::{predict_position, HynnParams};
use crate::table::FingerprintTable;

/// Default neighbourhood size for CSI association ("at least nine").
pub const DEFAULT_NEIGHBOURS: usize = 9;

/// Measurement-variance floor used when calibrating the filter from
/// validation residuals, in mm^2.
pub const MIN_MEASUREMENT_VARIANCE: f64 = 25.0;

/// Mean polar feature row of the `k` fingerprint rows nearest to `pos`.
///
/// Selection: Euclidean distance to the row's position, ties broken by row
/// index. Averaging runs in ascending row-index order; modulus columns use
/// the deviation-from-first arithmetic mean `v0 + mean(v_i - v0)`, argument
/// columns the circular mean `atan2(mean sin, mean cos)` wrapped into
/// `(-pi, pi]`. A column whose selected values are all bit-identical yields
/// that value exactly.
pub fn associate_csi(
    pos: PointMm,
    table: &FingerprintTable,
    k: usize,
) -> Result<Vec<f64>, SimError> {
    if table.is_empty() {
        return Err(SimError::EmptyTable);
    }
    if !pos.is_finite() {
        return Err(SimError::BadParameter { what: "query position must be finite" });
    }
    if k < DEFAULT_NEIGHBOURS {
        return Err(SimError::KTooSmall { k });
    }
    if k > table.len() {
        return Err(SimError::KExceedsRows { k, rows: table.len() });
    }

    // k smallest (squared distance, index) pairs; a full sort keeps the
    // tie-break explicit and the table sizes here make selection tricks
    // pointless.
    let mut order: Vec<(f64, usize)> = table
        .positions()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (dx, dy) = (p.x - pos.x, p.y - pos.y);
            (dx * dx + dy * dy, i)
        })
        .collect();
    order.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let mut picked: Vec<usize> = order[..k].iter().map(|&(_, i)| i).collect();
    picked.sort_unstable();

    Ok(mean_feature_rows(table, &picked))
}

/// Column-wise mean of the given table rows (ascending index order expected)
/// with the averaging rules of [`associate_csi`].
pub fn mean_feature_rows(table: &FingerprintTable, rows: &[usize]) -> Vec<f64> {
    let dim = table.feature_dim();
    let k = rows.len();
    let mut out = Vec::with_capacity(dim);
    for col in 0..dim {
        let first = table.features(rows[0])[col];
        let identical = rows.iter().all(|&r| table.features(r)[col].to_bits() == first.to_bits());
        if identical {
            out.push(first);
            continue;
        }
        if col % 2 == 0 {
            let mut dev = 0.0;
            for &r in rows {
                dev += table.features(r)[col] - first;
            }
            out.push(first + dev / k as f64);
        } else {
            let (mut s, mut c) = (0.0, 0.0);
            for &r in rows {
                let a = table.features(r)[col];
                s += a.sin();
                c += a.cos();
            }
            out.push(wrap_angle((s / k as f64).atan2(c / k as f64)));
        }
    }
    out
}

/// Anything that can turn a rendered image plus normalised features into a
/// position estimate. `&mut self` admits stateful substitutes (oracles,
/// replay stubs) alongside the trained network pair.
pub trait Predictor {
    fn predict(&mut self, image: &SyntheticImage, features: &[f64]) -> Result<PointMm, SimError>;
}

/// The trained per-axis regressor pair.
pub struct HynnPredictor<'a> {
    pub model_x: &'a HynnParams,
    pub model_y: &'a HynnParams,
}

impl Predictor for HynnPredictor<'_> {
    fn predict(&mut self, image: &SyntheticImage, features: &[f64]) -> Result<PointMm, SimError> {
        predict_position(self.model_x, self.model_y, image, features).map_err(SimError::Nn)
    }
}

/// Everything one evaluation run needs besides the predictor.
pub struct ExperimentSetup<'a> {
    pub kind: RouteKind,
    pub bounds: Bounds,
    /// Fingerprint table matching the predictor's antenna subset.
    pub table: &'a FingerprintTable,
    pub layout: &'a FeatureLayout,
    pub blur: &'a BlurSpec,
    pub fps_table: &'a FpsTable,
    pub antennas: usize,
    pub neighbours: usize,
    pub noise: NoiseSpec,
    pub kalman: KalmanConfig,
    pub route_seed: u64,
}

/// One prediction instant of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t_s: f64,
    pub truth: PointMm,
    pub raw: PointMm,
    pub filtered: PointMm,
}

/// A finished run: the per-instant trace plus both mean errors. The
/// filtered estimate is always computed; report cells pick one column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub rows: Vec<TraceRow>,
    pub raw_me_mm: f64,
    pub filtered_me_mm: f64,
}

impl RunResult {
    /// The mean error of the configured estimator column.
    pub fn mean_error_mm(&self, use_kalman: bool) -> f64 {
        if use_kalman {
            self.filtered_me_mm
        } else {
            self.raw_me_mm
        }
    }
}

/// Drive one experiment: generate the route, walk the prediction instants
/// (associate -> perturb -> render -> predict), then pass the raw track
/// through the constant-velocity filter. Component failures are wrapped
/// with the failing step index.
pub fn run_experiment(
    setup: &ExperimentSetup<'_>,
    predictor: &mut dyn Predictor,
) -> Result<RunResult, SimError> {
    let route = generate_route(setup.kind, &setup.bounds, setup.route_seed)?;
    let instants = subsample(&route, setup.antennas, setup.fps_table)?;
    let mut injector = NoiseInjector::new(setup.noise, &setup.table.feature_ranges())?;

    let at = |step: usize| move |e: SimError| e.at_step(step);
    let mut raw = Vec::with_capacity(instants.len());
    for (step, (_, pos)) in instants.iter().enumerate() {
        let row = associate_csi(*pos, setup.table, setup.neighbours).map_err(at(step))?;
        let noisy = injector.apply(&row).map_err(at(step))?;
        let image = render(&noisy, setup.layout, setup.blur)
            .map_err(|e| SimError::Image(e).at_step(step))?;
        let features = setup
            .layout
            .normalise_row(&noisy)
            .map_err(|e| SimError::Image(e).at_step(step))?;
        raw.push(predictor.predict(&image, &features).map_err(at(step))?);
    }

    let fixes: Vec<(f64, PointMm)> =
        instants.iter().map(|&(t, _)| t).zip(raw.iter().copied()).collect();
    let states = run_filter(&fixes, &setup.kalman).map_err(SimError::Kalman)?;
    let filtered: Vec<PointMm> = states.iter().map(|(_, s)| s.position()).collect();

    let truth: Vec<PointMm> = instants.iter().map(|&(_, p)| p).collect();
    let rows = instants
        .iter()
        .zip(raw.iter().zip(&filtered))
        .map(|(&(t_s, truth), (&raw, &filtered))| TraceRow { t_s, truth, raw, filtered })
        .collect();
    Ok(RunResult {
        rows,
        raw_me_mm: mean_error(&truth, &raw),
        filtered_me_mm: mean_error(&truth, &filtered),
    })
}

/// Estimate per-axis measurement variances for the filter by running the
/// predictor over labelled rows under the run's noise level: the returned
/// `(r_x, r_y)` are the residual variances (about the residual mean),
/// floored at [`MIN_MEASUREMENT_VARIANCE`].
///
/// The rows should come from the validation split — never the training
/// split, whose residuals underestimate the deployment error.
pub fn calibrate_measurement_noise(
    predictor: &mut dyn Predictor,
    table: &FingerprintTable,
    layout: &FeatureLayout,
    blur: &BlurSpec,
    noise: NoiseSpec,
) -> Result<(f64, f64), SimError> {
    if table.is_empty() {
        return Err(SimError::EmptyTable);
    }
    let mut injector = NoiseInjector::new(noise, &table.feature_ranges())?;
    let n = table.len();
    let mut dx = Vec::with_capacity(n);
    let mut dy = Vec::with_capacity(n);
    for row in 0..n {
        let noisy = injector.apply(table.features(row)).map_err(|e| e.at_step(row))?;
        let image = render(&noisy, layout, blur).map_err(|e| SimError::Image(e).at_step(row))?;
        let features =
            layout.normalise_row(&noisy).map_err(|e| SimError::Image(e).at_step(row))?;
        let pred = predictor.predict(&image, &features).map_err(|e| e.at_step(row))?;
        let truth = table.position(row);
        dx.push(pred.x - truth.x);
        dy.push(pred.y - truth.y);
    }
    Ok((residual_variance(&dx), residual_variance(&dy)))
}

fn residual_variance(residuals: &[f64]) -> f64 {
    let n = residuals.len() as f64;
    let mean = residuals.iter().sum::<f64>() / n;
    let var = residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
    var.max(MIN_MEASUREMENT_VARIANCE)
}
