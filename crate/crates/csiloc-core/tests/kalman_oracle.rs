//! Filter correctness against independent references: the batch
//! weighted-least-squares estimate of the full trajectory, covariance
//! health over long random runs, and the smoothing/lag behaviour the
//! simulated experiments rely on.

use csiloc_core::kalman::{
    predict, process_noise, run_filter, transition, update, KalmanConfig, KalmanState,
};
use csiloc_core::PointMm;
use nalgebra::{DMatrix, DVector, Matrix4};
use rand::{Rng, SeedableRng};

fn mat4(a: &[[f64; 4]; 4]) -> Matrix4<f64> {
    Matrix4::from_fn(|i, j| a[i][j])
}

/// Batch maximum-a-posteriori estimate of the whole trajectory for the same
/// linear-Gaussian model the filter uses: prior on the initial state from
/// the first fix, white-noise-acceleration transitions, position fixes with
/// diagonal noise. The final state block of the solution must agree with
/// the recursive filter.
fn batch_wls_final_state(
    measurements: &[(f64, PointMm)],
    q: f64,
    r_x: f64,
    r_y: f64,
) -> [f64; 4] {
    let n = measurements.len();
    let cols = 4 * n;
    let rows = 4 + 6 * (n - 1);
    // Whitened stacked system: each residual block is premultiplied by the
    // inverse square root of its covariance, so the solution of the plain
    // least-squares problem is the weighted estimate. Solving the tall
    // system directly (instead of its normal equations) keeps the
    // conditioning at the square root of the information-matrix spread.
    let mut j = DMatrix::<f64>::zeros(rows, cols);
    let mut rhs = DVector::<f64>::zeros(rows);

    // Prior: position from the first fix, zero velocity, covariance
    // diag(r_x, r_y, v0, v0).
    let p0_sqrt_inv = [
        1.0 / r_x.sqrt(),
        1.0 / r_y.sqrt(),
        1.0 / csiloc_core::kalman::INITIAL_VELOCITY_VARIANCE.sqrt(),
        1.0 / csiloc_core::kalman::INITIAL_VELOCITY_VARIANCE.sqrt(),
    ];
    let mu0 = [measurements[0].1.x, measurements[0].1.y, 0.0, 0.0];
    for i in 0..4 {
        j[(i, i)] = p0_sqrt_inv[i];
        rhs[i] = p0_sqrt_inv[i] * mu0[i];
    }

    let mut row = 4;
    for k in 0..n - 1 {
        let dt = measurements[k + 1].0 - measurements[k].0;
        let f = mat4(&transition(dt));
        let l = nalgebra::Cholesky::new(mat4(&process_noise(q, dt)))
            .expect("Q is positive definite")
            .l();
        let w = l.try_inverse().expect("triangular factor is invertible");
        // Rows w * (x_{k+1} - F x_k) = 0.
        let wf = w * f;
        for i in 0..4 {
            for c in 0..4 {
                j[(row + i, 4 * k + c)] = -wf[(i, c)];
                j[(row + i, 4 * (k + 1) + c)] = w[(i, c)];
            }
        }
        row += 4;
    }

    // Position fixes after the first (the first one is the prior above).
    for (k, &(_, z)) in measurements.iter().enumerate().skip(1) {
        j[(row, 4 * k)] = 1.0 / r_x.sqrt();
        rhs[row] = z.x / r_x.sqrt();
        j[(row + 1, 4 * k + 1)] = 1.0 / r_y.sqrt();
        rhs[row + 1] = z.y / r_y.sqrt();
        row += 2;
    }
    assert_eq!(row, rows);

    let x = j.svd(true, true).solve(&rhs, 0.0).expect("least-squares solve");
    [x[cols - 4], x[cols - 3], x[cols - 2], x[cols - 1]]
}

#[test]
fn filtered_mean_matches_the_batch_least_squares_oracle() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xCA1);
    for case in 0..100 {
        let n = rng.gen_range(2..=10);
        let q = 10f64.powf(rng.gen_range(-1.0..3.0));
        let r_x = 10f64.powf(rng.gen_range(0.0..3.0));
        let r_y = 10f64.powf(rng.gen_range(0.0..3.0));
        let mut t = 0.0;
        let mut measurements = Vec::with_capacity(n);
        for _ in 0..n {
            t += rng.gen_range(0.05..2.0);
            measurements.push((
                t,
                PointMm::new(rng.gen_range(-2000.0..2000.0), rng.gen_range(-2000.0..2000.0)),
            ));
        }

        let config = KalmanConfig::new(q, r_x, r_y).unwrap();
        let states = run_filter(&measurements, &config).unwrap();
        let kf = states.last().unwrap().1.mean;
        let wls = batch_wls_final_state(&measurements, q, r_x, r_y);

        let diff = (0..4).map(|i| (kf[i] - wls[i]).powi(2)).sum::<f64>().sqrt();
        let scale = wls.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
        assert!(
            diff / scale < 1e-9,
            "case {case}: filter {kf:?} vs batch estimate {wls:?} (relative gap {})",
            diff / scale
        );
    }
}

#[test]
fn covariance_stays_symmetric_positive_definite() {
    let mut rng = rand::rngs::StdRng::seed_from_u64(0xC07);
    let config = KalmanConfig::new(80.0, 150.0, 220.0).unwrap();
    let mut state = KalmanState::from_measurement(PointMm::new(0.0, 0.0), &config);
    for cycle in 0..10_000 {
        let dt = rng.gen_range(0.01..1.0);
        state = predict(&state, dt, &config).unwrap();
        if rng.gen_bool(0.7) {
            let z = PointMm::new(rng.gen_range(-3000.0..3000.0), rng.gen_range(-3000.0..3000.0));
            state = update(&state, z, &config).unwrap();
        }

        let p = mat4(&state.cov);
        let asym = (p - p.transpose()).abs().max();
        assert!(asym <= 1e-9 * p.abs().max().max(1.0), "cycle {cycle}: asymmetry {asym}");
        let eigen = nalgebra::SymmetricEigen::new(p);
        let min = eigen.eigenvalues.min();
        let max = eigen.eigenvalues.max();
        assert!(
            min > -1e-9 * max.max(1.0),
            "cycle {cycle}: covariance lost positive semidefiniteness (min eigenvalue {min})"
        );
    }
}

#[test]
fn filtering_beats_raw_fixes_on_a_straight_drive() {
    // Constant-velocity truth with i.i.d. measurement noise; averaged over
    // 100 seeded runs the filtered track must beat the raw fixes.
    let sigma = 25.0;
    let config = KalmanConfig::new(50.0, sigma * sigma, sigma * sigma).unwrap();
    let mut raw_mse_sum = 0.0;
    let mut kf_mse_sum = 0.0;
    for seed in 0..100u64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(1000 + seed);
        let mut gauss = || {
            // Box-Muller from two uniforms; plenty for a smoke comparison.
            let u: f64 = rng.gen_range(1e-12..1.0);
            let v: f64 = rng.gen_range(0.0..core::f64::consts::TAU);
            (-2.0 * u.ln()).sqrt() * v.cos()
        };
        let mut measurements = Vec::new();
        let mut truth = Vec::new();
        for i in 0..60 {
            let t = 0.1 * i as f64;
            let p = PointMm::new(100.0 + 180.0 * t, 250.0 + 90.0 * t);
            truth.push(p);
            measurements
                .push((t, PointMm::new(p.x + sigma * gauss(), p.y + sigma * gauss())));
        }
        let states = run_filter(&measurements, &config).unwrap();
        for i in 0..truth.len() {
            raw_mse_sum += truth[i].distance(&measurements[i].1).powi(2);
            kf_mse_sum += truth[i].distance(&states[i].1.position()).powi(2);
        }
    }
    assert!(
        kf_mse_sum < raw_mse_sum,
        "filtered MSE {kf_mse_sum} did not beat raw MSE {raw_mse_sum}"
    );
}

#[test]
fn filter_lags_behind_an_instantaneous_jump() {
    for seed in 0..20u64 {
        let mut rng = rand::rngs::StdRng::seed_from_u64(77 + seed);
        let sigma = 10.0;
        let config = KalmanConfig::new(50.0, sigma * sigma, sigma * sigma).unwrap();
        let jump_at = 30usize;
        let mut measurements = Vec::new();
        let mut truth = Vec::new();
        for i in 0..45 {
            let t = 0.1 * i as f64;
            let p = if i < jump_at {
                PointMm::new(500.0, 500.0)
            } else {
                PointMm::new(1300.0, 900.0)
            };
            truth.push(p);
            let noise = |rng: &mut rand::rngs::StdRng| rng.gen_range(-sigma..sigma);
            measurements.push((t, PointMm::new(p.x + noise(&mut rng), p.y + noise(&mut rng))));
        }
        let states = run_filter(&measurements, &config).unwrap();
        let lagged = (jump_at..jump_at + 3).any(|i| {
            truth[i].distance(&states[i].1.position()) > truth[i].distance(&measurements[i].1)
        });
        assert!(lagged, "seed {seed}: filter should trail the teleport for at least one step");
    }
}
