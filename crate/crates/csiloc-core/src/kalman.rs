//! Constant-velocity Kalman filter over 2D position measurements.
//!
//! State is `(x, y, vx, vy)` in millimetres and millimetres per second. The
//! motion model is constant velocity with white-noise acceleration of
//! intensity `q` (mm^2/s^3); measurements are noisy `(x, y)` readings. The
//! covariance update uses the Joseph form and explicit resymmetrisation so
//! the covariance stays symmetric positive semidefinite through long runs.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geom::PointMm;

/// Errors from filter configuration and stepping.
#[derive(Clone, Debug, PartialEq)]
pub enum KalmanError {
    /// Prediction needs a strictly positive, finite time step.
    InvalidDt { dt: f64 },
    /// The innovation covariance was numerically singular.
    SingularInnovation { det: f64 },
    /// Measurement timestamps must be strictly increasing.
    NonMonotonicTime { index: usize, t: f64, previous: f64 },
    /// A measurement coordinate is NaN or infinite.
    NonFiniteMeasurement { index: usize },
    /// Configuration values must be finite with positive noise terms.
    BadConfig { what: &'static str },
}

impl core::fmt::Display for KalmanError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KalmanError::InvalidDt { dt } => write!(f, "time step must be positive, got {dt}"),
            KalmanError::SingularInnovation { det } => {
                write!(f, "innovation covariance is numerically singular (det {det})")
            }
            KalmanError::NonMonotonicTime { index, t, previous } => write!(
                f,
                "measurement {index} at t={t} does not advance past t={previous}"
            ),
            KalmanError::NonFiniteMeasurement { index } => {
                write!(f, "measurement {index} has non-finite coordinates")
            }
            KalmanError::BadConfig { what } => write!(f, "bad filter configuration: {what}"),
        }
    }
}

impl core::error::Error for KalmanError {}

pub type Mat2 = [[f64; 2]; 2];
pub type Mat4 = [[f64; 4]; 4];

/// Filter tuning: process noise intensity, measurement covariance and the
/// covariance used when initialising from the first fix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KalmanConfig {
    /// White-noise acceleration intensity, mm^2/s^3.
    pub q: f64,
    /// Measurement covariance of the (x, y) fixes, mm^2.
    pub r: Mat2,
    /// Initial state covariance.
    pub p0: Mat4,
}

/// Velocity variance assigned at initialisation: the first fix says nothing
/// about speed, so the filter starts almost agnostic about it.
pub const INITIAL_VELOCITY_VARIANCE: f64 = 1e6;

impl KalmanConfig {
    /// Standard construction: diagonal measurement noise, initial covariance
    /// `diag(r_x, r_y, 1e6, 1e6)`.
    pub fn new(q: f64, r_x: f64, r_y: f64) -> Result<Self, KalmanError> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(KalmanError::BadConfig { what: "process noise q must be positive" });
        }
        if !(r_x > 0.0) || !(r_y > 0.0) || !r_x.is_finite() || !r_y.is_finite() {
            return Err(KalmanError::BadConfig { what: "measurement variances must be positive" });
        }
        let mut p0 = [[0.0; 4]; 4];
        p0[0][0] = r_x;
        p0[1][1] = r_y;
        p0[2][2] = INITIAL_VELOCITY_VARIANCE;
        p0[3][3] = INITIAL_VELOCITY_VARIANCE;
        Ok(Self { q, r: [[r_x, 0.0], [0.0, r_y]], p0 })
    }
}

/// Filter state: mean and covariance of `(x, y, vx, vy)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KalmanState {
    pub mean: [f64; 4],
    pub cov: Mat4,
}

impl KalmanState {
    /// Initialise from the first fix: position from the measurement, zero
    /// velocity, covariance from the configuration.
    pub fn from_measurement(z: PointMm, config: &KalmanConfig) -> Self {
        Self { mean: [z.x, z.y, 0.0, 0.0], cov: config.p0 }
    }

    pub fn position(&self) -> PointMm {
        PointMm::new(self.mean[0], self.mean[1])
    }

    pub fn velocity(&self) -> (f64, f64) {
        (self.mean[2], self.mean[3])
    }
}

fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for (k, bk) in b.iter().enumerate() {
                s += a[i][k] * bk[j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn mat4_transpose(a: &Mat4) -> Mat4 {
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = a[j][i];
        }
    }
    out
}

fn resymmetrise(p: &mut Mat4) {
    for i in 0..4 {
        for j in (i + 1)..4 {
            let m = 0.5 * (p[i][j] + p[j][i]);
            p[i][j] = m;
            p[j][i] = m;
        }
    }
}

/// State transition matrix for a step of `dt` seconds.
pub fn transition(dt: f64) -> Mat4 {
    [
        [1.0, 0.0, dt, 0.0],
        [0.0, 1.0, 0.0, dt],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// White-noise-acceleration process covariance for a step of `dt` seconds:
/// per axis, `q * [[dt^3/3, dt^2/2], [dt^2/2, dt]]` over (position, velocity).
pub fn process_noise(q: f64, dt: f64) -> Mat4 {
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    let a = q * dt3 / 3.0;
    let b = q * dt2 / 2.0;
    let c = q * dt;
    [
        [a, 0.0, b, 0.0],
        [0.0, a, 0.0, b],
        [b, 0.0, c, 0.0],
        [0.0, b, 0.0, c],
    ]
}

/// Propagate the state `dt` seconds forward under the constant-velocity
/// model: `x' = F x`, `P' = F P F^T + Q(dt)`.
pub fn predict(state: &KalmanState, dt: f64, config: &KalmanConfig) -> Result<KalmanState, KalmanError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(KalmanError::InvalidDt { dt });
    }
    let f = transition(dt);
    let mean = [
        state.mean[0] + dt * state.mean[2],
        state.mean[1] + dt * state.mean[3],
        state.mean[2],
        state.mean[3],
    ];
    let mut cov = mat4_mul(&mat4_mul(&f, &state.cov), &mat4_transpose(&f));
    let q = process_noise(config.q, dt);
    for i in 0..4 {
        for j in 0..4 {
            cov[i][j] += q[i][j];
        }
    }
    resymmetrise(&mut cov);
    Ok(KalmanState { mean, cov })
}

/// Fold one `(x, y)` measurement into the state (Joseph-form update).
pub fn update(state: &KalmanState, z: PointMm, config: &KalmanConfig) -> Result<KalmanState, KalmanError> {
    if !z.is_finite() {
        return Err(KalmanError::NonFiniteMeasurement { index: 0 });
    }
    let p = &state.cov;
    let r = &config.r;

    // Innovation covariance S = H P H^T + R; H selects rows 0 and 1.
    let s = [
        [p[0][0] + r[0][0], p[0][1] + r[0][1]],
        [p[1][0] + r[1][0], p[1][1] + r[1][1]],
    ];
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let scale = (s[0][0].abs() + s[1][1].abs()).powi(2).max(f64::MIN_POSITIVE);
    if !det.is_finite() || det.abs() < 1e-14 * scale {
        return Err(KalmanError::SingularInnovation { det });
    }
    let s_inv = [
        [s[1][1] / det, -s[0][1] / det],
        [-s[1][0] / det, s[0][0] / det],
    ];

    // Kalman gain K = P H^T S^{-1}, 4 x 2; P H^T is just the first two
    // columns of P.
    let mut k = [[0.0; 2]; 4];
    for i in 0..4 {
        for j in 0..2 {
            k[i][j] = p[i][0] * s_inv[0][j] + p[i][1] * s_inv[1][j];
        }
    }

    let innovation = [z.x - state.mean[0], z.y - state.mean[1]];
    let mut mean = state.mean;
    for i in 0..4 {
        mean[i] += k[i][0] * innovation[0] + k[i][1] * innovation[1];
    }

    // Joseph form: P = (I - K H) P (I - K H)^T + K R K^T.
    let mut ikh = [[0.0; 4]; 4];
    for (i, row) in ikh.iter_mut().enumerate() {
        row[i] = 1.0;
        row[0] -= k[i][0];
        row[1] -= k[i][1];
    }
    let mut cov = mat4_mul(&mat4_mul(&ikh, p), &mat4_transpose(&ikh));
    // K R K^T term.
    for i in 0..4 {
        for j in 0..4 {
            let mut krk = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    krk += k[i][a] * r[a][b] * k[j][b];
                }
            }
            cov[i][j] += krk;
        }
    }
    resymmetrise(&mut cov);
    Ok(KalmanState { mean, cov })
}

/// Run the filter over a timestamped measurement sequence.
///
/// The first measurement initialises the state (zero velocity, `p0`
/// covariance); each later one is a predict-update cycle over the elapsed
/// time. Returns the posterior state at every timestamp. Timestamps must be
/// strictly increasing and finite.
pub fn run_filter(
    measurements: &[(f64, PointMm)],
    config: &KalmanConfig,
) -> Result<Vec<(f64, KalmanState)>, KalmanError> {
    let mut out = Vec::with_capacity(measurements.len());
    let mut state: Option<(f64, KalmanState)> = None;
    for (index, &(t, z)) in measurements.iter().enumerate() {
        if !t.is_finite() {
            return Err(KalmanError::NonMonotonicTime { index, t, previous: f64::NAN });
        }
        if !z.is_finite() {
            return Err(KalmanError::NonFiniteMeasurement { index });
        }
        let next = match state {
            None => KalmanState::from_measurement(z, config),
            Some((prev_t, prev)) => {
                if t <= prev_t {
                    return Err(KalmanError::NonMonotonicTime { index, t, previous: prev_t });
                }
                let predicted = predict(&prev, t - prev_t, config)?;
                update(&predicted, z, config)?
            }
        };
        out.push((t, next));
        state = Some((t, next));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn default_config() -> KalmanConfig {
        KalmanConfig::new(100.0, 400.0, 400.0).unwrap()
    }

    #[test]
    fn predict_moves_position_by_velocity() {
        let config = default_config();
        let state = KalmanState {
            mean: [10.0, 20.0, 3.0, -2.0],
            cov: config.p0,
        };
        let next = predict(&state, 0.5, &config).unwrap();
        assert_eq!(next.mean, [11.5, 19.0, 3.0, -2.0]);
    }

    #[test]
    fn predict_from_zero_covariance_yields_exactly_q() {
        let config = default_config();
        let state = KalmanState { mean: [0.0; 4], cov: [[0.0; 4]; 4] };
        let dt = 1.0;
        let next = predict(&state, dt, &config).unwrap();
        let expect = process_noise(config.q, dt);
        for i in 0..4 {
            for j in 0..4 {
                assert_abs_diff_eq!(next.cov[i][j], expect[i][j], epsilon = 1e-12);
            }
        }
        // And the block values match the textbook formula directly.
        assert_abs_diff_eq!(next.cov[0][0], 100.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(next.cov[0][2], 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(next.cov[2][2], 100.0, epsilon = 1e-12);
        assert_eq!(next.cov[0][1], 0.0);
    }

    #[test]
    fn invalid_dt_is_rejected() {
        let config = default_config();
        let state = KalmanState::from_measurement(PointMm::new(0.0, 0.0), &config);
        for dt in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                predict(&state, dt, &config),
                Err(KalmanError::InvalidDt { .. })
            ));
        }
    }

    #[test]
    fn scalar_update_matches_hand_computed_gain() {
        // Prior: position variance 1 on each axis, no velocity uncertainty,
        // measurement variance 1. Gain = 1/2, so the posterior mean moves
        // halfway to the measurement and the variance halves.
        let config = KalmanConfig::new(1.0, 1.0, 1.0).unwrap();
        let mut state = KalmanState { mean: [0.0; 4], cov: [[0.0; 4]; 4] };
        state.cov[0][0] = 1.0;
        state.cov[1][1] = 1.0;
        let posterior = update(&state, PointMm::new(2.0, 0.0), &config).unwrap();
        assert_abs_diff_eq!(posterior.mean[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(posterior.mean[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(posterior.cov[0][0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(posterior.cov[1][1], 0.5, epsilon = 1e-12);
        // Velocity stays untouched: no cross-covariance to carry the fix.
        assert_eq!(posterior.mean[2], 0.0);
        assert_abs_diff_eq!(posterior.cov[2][2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn update_never_inflates_position_uncertainty() {
        let config = default_config();
        let state = KalmanState {
            mean: [5.0, -3.0, 1.0, 1.0],
            cov: [
                [900.0, 10.0, 40.0, 0.0],
                [10.0, 700.0, 0.0, 30.0],
                [40.0, 0.0, 50.0, 5.0],
                [0.0, 30.0, 5.0, 60.0],
            ],
        };
        let posterior = update(&state, PointMm::new(6.0, -2.0), &config).unwrap();
        // Position marginal variances cannot grow; the Loewner-order check
        // lives in the property tests, this is the cheap diagonal version.
        assert!(posterior.cov[0][0] <= state.cov[0][0] + 1e-12);
        assert!(posterior.cov[1][1] <= state.cov[1][1] + 1e-12);
    }

    #[test]
    fn singular_innovation_is_detected() {
        // Zero prior covariance and zero measurement noise make S = 0. The
        // config is hand-built because the constructor rejects r = 0.
        let config = KalmanConfig { q: 1.0, r: [[0.0; 2]; 2], p0: [[0.0; 4]; 4] };
        let state = KalmanState { mean: [0.0; 4], cov: [[0.0; 4]; 4] };
        assert!(matches!(
            update(&state, PointMm::new(1.0, 1.0), &config),
            Err(KalmanError::SingularInnovation { .. })
        ));
    }

    #[test]
    fn run_filter_initialises_from_the_first_fix() {
        let config = default_config();
        let states = run_filter(&[(0.0, PointMm::new(120.0, -80.0))], &config).unwrap();
        assert_eq!(states.len(), 1);
        let s = states[0].1;
        assert_eq!(s.mean, [120.0, -80.0, 0.0, 0.0]);
        assert_eq!(s.cov, config.p0);
    }

    #[test]
    fn run_filter_requires_strictly_increasing_time() {
        let config = default_config();
        let z = PointMm::new(0.0, 0.0);
        let err = run_filter(&[(0.0, z), (0.0, z)], &config).unwrap_err();
        assert!(matches!(err, KalmanError::NonMonotonicTime { index: 1, .. }));
        let err = run_filter(&[(0.0, z), (1.0, z), (0.5, z)], &config).unwrap_err();
        assert!(matches!(err, KalmanError::NonMonotonicTime { index: 2, .. }));
    }

    #[test]
    fn non_finite_measurement_is_rejected() {
        let config = default_config();
        let err = run_filter(&[(0.0, PointMm::new(f64::NAN, 0.0))], &config).unwrap_err();
        assert!(matches!(err, KalmanError::NonFiniteMeasurement { index: 0 }));
    }

    #[test]
    fn velocity_converges_on_a_clean_constant_velocity_track() {
        // Noise-free fixes from a constant-velocity target: after a couple
        // of seconds the velocity estimate should be within 1% of truth.
        let config = KalmanConfig::new(1.0, 25.0, 25.0).unwrap();
        let (vx, vy) = (80.0, -40.0);
        let measurements: Vec<(f64, PointMm)> = (0..21)
            .map(|i| {
                let t = i as f64 * 0.25;
                (t, PointMm::new(100.0 + vx * t, 900.0 + vy * t))
            })
            .collect();
        let states = run_filter(&measurements, &config).unwrap();
        let (got_vx, got_vy) = states.last().unwrap().1.velocity();
        assert!(
            (got_vx - vx).abs() < 0.01 * vx.abs(),
            "vx estimate {got_vx} not within 1% of {vx}"
        );
        assert!(
            (got_vy - vy).abs() < 0.01 * vy.abs(),
            "vy estimate {got_vy} not within 1% of {vy}"
        );
    }

    #[test]
    fn covariance_stays_symmetric_over_many_cycles() {
        let config = default_config();
        let mut state = KalmanState::from_measurement(PointMm::new(0.0, 0.0), &config);
        for i in 1..500 {
            state = predict(&state, 0.2, &config).unwrap();
            state = update(
                &state,
                PointMm::new(i as f64 * 10.0, i as f64 * 5.0),
                &config,
            )
            .unwrap();
            for a in 0..4 {
                for b in 0..4 {
                    assert_eq!(state.cov[a][b], state.cov[b][a]);
                }
            }
        }
    }
}
