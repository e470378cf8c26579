//! Channel-state-information synthesis and polar feature extraction.
//!
//! A CSI sample is the complex channel matrix `M` of shape antennas x
//! subcarriers observed between a fixed antenna array and one transmitter
//! position. The synthetic channel is a deterministic multipath sum: a
//! line-of-sight ray plus one single-bounce ray per configured reflector,
//! each with free-space 1/d amplitude decay and phase `-2*pi*f*d/c` at the
//! subcarrier frequency. Fingerprints for learning are the per-entry polar
//! decomposition (modulus, argument) flattened in a fixed column order.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
pub use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::geom::PointMm;
use crate::rng::GaussSource;

/// Speed of light in metres per second.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Positions closer than this to an antenna or reflector make the 1/d path
/// amplitudes meaningless and are rejected.
pub const MIN_GEOMETRY_DISTANCE_MM: f64 = 1.0;

/// Errors from array construction, synthesis and matrix validation.
#[derive(Clone, Debug, PartialEq)]
pub enum CsiError {
    /// Array elements are not a uniform linear array within tolerance.
    NotUniformLinear { detail: &'static str },
    /// A parameter that must be strictly positive (or finite) is not.
    BadParameter { what: &'static str },
    /// Transmitter position is on top of an antenna element or a reflector.
    DegenerateGeometry { distance_mm: f64 },
    /// A matrix entry or coordinate is NaN or infinite.
    NonFinite { row: usize, col: usize },
    /// A sample's dimensions disagree with the expected antennas/subcarriers.
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
}

impl core::fmt::Display for CsiError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CsiError::NotUniformLinear { detail } => {
                write!(f, "antenna elements do not form a uniform linear array: {detail}")
            }
            CsiError::BadParameter { what } => write!(f, "invalid parameter: {what}"),
            CsiError::DegenerateGeometry { distance_mm } => write!(
                f,
                "position is {distance_mm} mm from an antenna or reflector (minimum {MIN_GEOMETRY_DISTANCE_MM} mm)"
            ),
            CsiError::NonFinite { row, col } => {
                write!(f, "non-finite value at entry ({row}, {col})")
            }
            CsiError::ShapeMismatch { expected, got } => write!(
                f,
                "expected a {}x{} matrix, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
        }
    }
}

impl core::error::Error for CsiError {}

/// A uniform linear antenna array with its OFDM frequency plan.
///
/// Subcarrier `s` (zero-based) sits at `carrier_hz + s * subcarrier_spacing_hz`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AntennaArray {
    elements: Vec<PointMm>,
    carrier_hz: f64,
    subcarrier_spacing_hz: f64,
    subcarriers: usize,
}

impl AntennaArray {
    /// Tolerance for the uniform-linear-array check, in millimetres.
    pub const ULA_TOLERANCE_MM: f64 = 1e-9;

    /// Validate an explicit element list as a uniform linear array.
    pub fn new(
        elements: Vec<PointMm>,
        carrier_hz: f64,
        subcarrier_spacing_hz: f64,
        subcarriers: usize,
    ) -> Result<Self, CsiError> {
        if elements.is_empty() {
            return Err(CsiError::BadParameter { what: "empty antenna element list" });
        }
        if !(carrier_hz > 0.0) || !carrier_hz.is_finite() {
            return Err(CsiError::BadParameter { what: "carrier frequency must be positive" });
        }
        if !(subcarrier_spacing_hz > 0.0) || !subcarrier_spacing_hz.is_finite() {
            return Err(CsiError::BadParameter { what: "subcarrier spacing must be positive" });
        }
        if subcarriers == 0 {
            return Err(CsiError::BadParameter { what: "need at least one subcarrier" });
        }
        for e in &elements {
            if !e.is_finite() {
                return Err(CsiError::BadParameter { what: "non-finite antenna coordinate" });
            }
        }
        if elements.len() >= 2 {
            check_uniform_linear(&elements)?;
        }
        Ok(Self { elements, carrier_hz, subcarrier_spacing_hz, subcarriers })
    }

    /// Build a uniform linear array from an origin element and a fixed step.
    pub fn ula(
        origin: PointMm,
        step: PointMm,
        count: usize,
        carrier_hz: f64,
        subcarrier_spacing_hz: f64,
        subcarriers: usize,
    ) -> Result<Self, CsiError> {
        if count == 0 {
            return Err(CsiError::BadParameter { what: "antenna count must be at least 1" });
        }
        if count >= 2 && step.x == 0.0 && step.y == 0.0 {
            return Err(CsiError::BadParameter { what: "zero element step" });
        }
        let elements = (0..count)
            .map(|i| PointMm::new(origin.x + i as f64 * step.x, origin.y + i as f64 * step.y))
            .collect();
        Self::new(elements, carrier_hz, subcarrier_spacing_hz, subcarriers)
    }

    pub fn elements(&self) -> &[PointMm] {
        &self.elements
    }

    pub fn antennas(&self) -> usize {
        self.elements.len()
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.subcarrier_spacing_hz
    }

    /// Frequency of zero-based subcarrier `s` in Hz.
    pub fn subcarrier_hz(&self, s: usize) -> f64 {
        self.carrier_hz + s as f64 * self.subcarrier_spacing_hz
    }
}

/// Reject element lists that are not collinear and equally spaced.
fn check_uniform_linear(elements: &[PointMm]) -> Result<(), CsiError> {
    let first = elements[0];
    let last = elements[elements.len() - 1];
    let len = first.distance(&last);
    if len <= 0.0 {
        return Err(CsiError::NotUniformLinear { detail: "end elements coincide" });
    }
    let dir = PointMm::new((last.x - first.x) / len, (last.y - first.y) / len);
    let mut prev_t = 0.0f64;
    let mean_spacing = len / (elements.len() - 1) as f64;
    for (i, e) in elements.iter().enumerate() {
        let t = (e.x - first.x) * dir.x + (e.y - first.y) * dir.y;
        let perp = (e.x - first.x) * (-dir.y) + (e.y - first.y) * dir.x;
        if perp.abs() > AntennaArray::ULA_TOLERANCE_MM {
            return Err(CsiError::NotUniformLinear { detail: "elements are not collinear" });
        }
        if i > 0 && ((t - prev_t) - mean_spacing).abs() > AntennaArray::ULA_TOLERANCE_MM {
            return Err(CsiError::NotUniformLinear { detail: "element spacing is not uniform" });
        }
        prev_t = t;
    }
    Ok(())
}

/// A single-bounce reflector: a point that re-radiates with a complex gain.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Reflector {
    pub position: PointMm,
    pub gain: Complex64,
}

/// Deterministic multipath scene: line-of-sight gain plus point reflectors.
///
/// `noise_floor` is the standard deviation (per real/imaginary part) of
/// additive complex measurement noise applied when fingerprints are captured
/// with [`synth_samples`]; [`synth_csi`] itself stays deterministic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScatterModel {
    pub reflectors: Vec<Reflector>,
    pub los_gain: Complex64,
    pub noise_floor: f64,
}

impl ScatterModel {
    pub fn new(reflectors: Vec<Reflector>, los_gain: Complex64, noise_floor: f64) -> Result<Self, CsiError> {
        if !(noise_floor >= 0.0) || !noise_floor.is_finite() {
            return Err(CsiError::BadParameter { what: "noise floor must be finite and >= 0" });
        }
        if !los_gain.re.is_finite() || !los_gain.im.is_finite() {
            return Err(CsiError::BadParameter { what: "non-finite line-of-sight gain" });
        }
        for r in &reflectors {
            if !r.position.is_finite() || !r.gain.re.is_finite() || !r.gain.im.is_finite() {
                return Err(CsiError::BadParameter { what: "non-finite reflector" });
            }
        }
        Ok(Self { reflectors, los_gain, noise_floor })
    }

    /// Line-of-sight only, unit gain, no capture noise.
    pub fn line_of_sight() -> Self {
        Self {
            reflectors: Vec::new(),
            los_gain: Complex64::new(1.0, 0.0),
            noise_floor: 0.0,
        }
    }
}

/// One CSI sample: complex antennas x subcarriers matrix, row-major, with an
/// optional ground-truth transmitter position label.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CsiMatrix {
    antennas: usize,
    subcarriers: usize,
    values: Vec<Complex64>,
    position: Option<PointMm>,
}

impl CsiMatrix {
    pub fn new(
        antennas: usize,
        subcarriers: usize,
        values: Vec<Complex64>,
        position: Option<PointMm>,
    ) -> Result<Self, CsiError> {
        if values.len() != antennas * subcarriers {
            return Err(CsiError::ShapeMismatch {
                expected: (antennas, subcarriers),
                got: (values.len() / subcarriers.max(1), subcarriers),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(CsiError::NonFinite { row: i / subcarriers.max(1), col: i % subcarriers.max(1) });
            }
        }
        if let Some(p) = &position {
            if !p.is_finite() {
                return Err(CsiError::BadParameter { what: "non-finite position label" });
            }
        }
        Ok(Self { antennas, subcarriers, values, position })
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    /// Entry for zero-based antenna `a`, subcarrier `s`.
    pub fn at(&self, a: usize, s: usize) -> Complex64 {
        self.values[a * self.subcarriers + s]
    }

    pub fn position(&self) -> Option<PointMm> {
        self.position
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Flatten into the polar feature order used by fingerprint tables:
    /// antenna-major, subcarrier-minor, modulus before argument, i.e.
    /// `[A1S1-m, A1S1-phi, A1S2-m, A1S2-phi, ..., A2S1-m, ...]`.
    ///
    /// Moduli are non-negative by construction; arguments are mapped into
    /// `(-pi, pi]`.
    pub fn to_polar(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.values.len());
        for z in &self.values {
            out.push(z.norm());
            out.push(wrap_angle(z.im.atan2(z.re)));
        }
        out
    }
}

/// Wrap an angle to the half-open interval `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use core::f64::consts::PI;
    let two_pi = 2.0 * PI;
    // Shift so the target interval becomes (0, 2*pi], then fold.
    let mut r = (a + PI) - ((a + PI) / two_pi).floor() * two_pi;
    if r <= 0.0 {
        r += two_pi;
    }
    r - PI
}

/// Feature column names in [`CsiMatrix::to_polar`] order, one-based antennas
/// and subcarriers, followed by the two position columns.
pub fn feature_column_names(antennas: usize, subcarriers: usize) -> Vec<String> {
    let mut names = Vec::with_capacity(2 * antennas * subcarriers + 2);
    for a in 1..=antennas {
        for s in 1..=subcarriers {
            names.push(format!("A{a}S{s}-m"));
            names.push(format!("A{a}S{s}-φ"));
        }
    }
    names.push(String::from("PosX"));
    names.push(String::from("PosY"));
    names
}

/// Synthesise the deterministic channel matrix for one transmitter position.
///
/// Entry `(a, s)` is
///
/// ```text
/// H[a][s] = g_los * exp(-j 2 pi f_s d_a / c) / d_a
///         + sum_k g_k * exp(-j 2 pi f_s (d_{a,k} + d_{k,p}) / c) / (d_{a,k} * d_{k,p})
/// ```
///
/// with distances in metres and `f_s` the subcarrier frequency. Fails with
/// [`CsiError::DegenerateGeometry`] if `pos` is within
/// [`MIN_GEOMETRY_DISTANCE_MM`] of an antenna element or reflector.
pub fn synth_csi(
    pos: PointMm,
    array: &AntennaArray,
    model: &ScatterModel,
) -> Result<CsiMatrix, CsiError> {
    if !pos.is_finite() {
        return Err(CsiError::BadParameter { what: "non-finite transmitter position" });
    }
    for e in array.elements() {
        let d = pos.distance(e);
        if d < MIN_GEOMETRY_DISTANCE_MM {
            return Err(CsiError::DegenerateGeometry { distance_mm: d });
        }
    }
    for r in &model.reflectors {
        let d = pos.distance(&r.position);
        if d < MIN_GEOMETRY_DISTANCE_MM {
            return Err(CsiError::DegenerateGeometry { distance_mm: d });
        }
    }

    let a_count = array.antennas();
    let s_count = array.subcarriers();
    let mut values = Vec::with_capacity(a_count * s_count);
    for element in array.elements() {
        // Path lengths do not depend on the subcarrier; precompute in metres.
        let d_los = pos.distance(element) / 1000.0;
        let bounces: Vec<(f64, Complex64)> = model
            .reflectors
            .iter()
            .map(|r| {
                let d_ak = element.distance(&r.position) / 1000.0;
                let d_kp = r.position.distance(&pos) / 1000.0;
                (d_ak + d_kp, r.gain / (d_ak * d_kp))
            })
            .collect();
        for s in 0..s_count {
            let f = array.subcarrier_hz(s);
            let phase_per_m = -2.0 * core::f64::consts::PI * f / SPEED_OF_LIGHT;
            let mut h = model.los_gain * Complex64::from_polar(1.0 / d_los, wrap_angle(phase_per_m * d_los));
            for (path_m, amp) in &bounces {
                h += amp * Complex64::from_polar(1.0, wrap_angle(phase_per_m * path_m));
            }
            values.push(h);
        }
    }
    CsiMatrix::new(a_count, s_count, values, Some(pos))
}

/// Synthesise labelled CSI samples for a list of positions, applying the
/// model's capture noise (`noise_floor` std per real/imaginary part) from a
/// seeded stream. With a zero noise floor the samples are exactly
/// [`synth_csi`] outputs.
pub fn synth_samples(
    positions: &[PointMm],
    array: &AntennaArray,
    model: &ScatterModel,
    seed: u64,
) -> Result<Vec<CsiMatrix>, CsiError> {
    let mut gauss = GaussSource::new(seed);
    let mut out = Vec::with_capacity(positions.len());
    for &pos in positions {
        let clean = synth_csi(pos, array, model)?;
        if model.noise_floor > 0.0 {
            let values = clean
                .values()
                .iter()
                .map(|z| {
                    z + Complex64::new(
                        model.noise_floor * gauss.next(),
                        model.noise_floor * gauss.next(),
                    )
                })
                .collect();
            out.push(CsiMatrix::new(
                clean.antennas(),
                clean.subcarriers(),
                values,
                Some(pos),
            )?);
        } else {
            out.push(clean);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::PI;

    fn los_array(antennas: usize, subcarriers: usize) -> AntennaArray {
        AntennaArray::ula(
            PointMm::new(0.0, 0.0),
            PointMm::new(62.5, 0.0),
            antennas,
            2.4e9,
            10.0e6,
            subcarriers,
        )
        .unwrap()
    }

    #[test]
    fn wrap_angle_covers_the_half_open_interval() {
        assert_abs_diff_eq!(wrap_angle(0.0), 0.0);
        assert_abs_diff_eq!(wrap_angle(3.0 * PI), PI, epsilon = 1e-12);
        // -pi belongs to the excluded end and must map to +pi.
        assert_eq!(wrap_angle(-PI), PI);
        assert_abs_diff_eq!(wrap_angle(PI + 0.1), -PI + 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(wrap_angle(-PI - 0.1), PI - 0.1, epsilon = 1e-12);
        for k in -5..=5 {
            let a = 0.7 + k as f64 * 2.0 * PI;
            assert_abs_diff_eq!(wrap_angle(a), 0.7, epsilon = 1e-9);
        }
    }

    #[test]
    fn polar_conversion_of_three_four_j() {
        let m = CsiMatrix::new(1, 1, vec![Complex64::new(3.0, 4.0)], None).unwrap();
        let row = m.to_polar();
        assert_eq!(row.len(), 2);
        assert_abs_diff_eq!(row[0], 5.0, epsilon = 1e-15);
        assert_abs_diff_eq!(row[1], 0.9272952180016122, epsilon = 1e-15);
    }

    #[test]
    fn polar_row_order_is_antenna_major_modulus_first() {
        // 2 antennas x 2 subcarriers with distinguishable entries.
        let values = vec![
            Complex64::new(1.0, 0.0),  // A1S1
            Complex64::new(0.0, 2.0),  // A1S2
            Complex64::new(-3.0, 0.0), // A2S1
            Complex64::new(0.0, -4.0), // A2S2
        ];
        let m = CsiMatrix::new(2, 2, values, None).unwrap();
        let row = m.to_polar();
        let expect = [1.0, 0.0, 2.0, PI / 2.0, 3.0, PI, 4.0, -PI / 2.0];
        assert_eq!(row.len(), 8);
        for (got, want) in row.iter().zip(&expect) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn column_names_follow_the_table_layout() {
        let names = feature_column_names(2, 2);
        assert_eq!(
            names,
            vec![
                "A1S1-m", "A1S1-φ", "A1S2-m", "A1S2-φ", "A2S1-m", "A2S1-φ", "A2S2-m", "A2S2-φ",
                "PosX", "PosY"
            ]
        );
    }

    #[test]
    fn los_channel_matches_closed_form() {
        // Single antenna at the origin, transmitter 1 m away on the x-axis:
        // modulus 1/d = 1 and phase -2 pi f d / c, wrapped.
        let array = AntennaArray::ula(
            PointMm::new(0.0, 0.0),
            PointMm::new(62.5, 0.0),
            1,
            2.4e9,
            10.0e6,
            1,
        )
        .unwrap();
        let m = synth_csi(PointMm::new(1000.0, 0.0), &array, &ScatterModel::line_of_sight()).unwrap();
        let h = m.at(0, 0);
        assert_abs_diff_eq!(h.norm(), 1.0, epsilon = 1e-12);
        let expected_phase = wrap_angle(-2.0 * PI * 2.4e9 * 1.0 / SPEED_OF_LIGHT);
        assert_abs_diff_eq!(h.arg(), expected_phase, epsilon = 1e-9);
    }

    #[test]
    fn one_reflector_adds_the_bounce_term() {
        // Hand-evaluate the two-path sum for a single antenna/subcarrier.
        let array = AntennaArray::ula(
            PointMm::new(0.0, 0.0),
            PointMm::new(62.5, 0.0),
            1,
            2.4e9,
            10.0e6,
            1,
        )
        .unwrap();
        let reflector = Reflector {
            position: PointMm::new(500.0, 500.0),
            gain: Complex64::new(0.3, -0.4),
        };
        let model = ScatterModel::new(vec![reflector], Complex64::new(1.0, 0.0), 0.0).unwrap();
        let pos = PointMm::new(1200.0, -300.0);
        let got = synth_csi(pos, &array, &model).unwrap().at(0, 0);

        let f = 2.4e9;
        let d_los = pos.distance(&PointMm::new(0.0, 0.0)) / 1000.0;
        let d_ak = reflector.position.distance(&PointMm::new(0.0, 0.0)) / 1000.0;
        let d_kp = reflector.position.distance(&pos) / 1000.0;
        let phase = |d: f64| -2.0 * PI * f * d / SPEED_OF_LIGHT;
        let want = Complex64::from_polar(1.0 / d_los, wrap_angle(phase(d_los)))
            + reflector.gain / (d_ak * d_kp) * Complex64::from_polar(1.0, wrap_angle(phase(d_ak + d_kp)));
        assert_abs_diff_eq!(got.re, want.re, epsilon = 1e-12);
        assert_abs_diff_eq!(got.im, want.im, epsilon = 1e-12);
    }

    #[test]
    fn modulus_decays_monotonically_along_a_line_of_sight_ray() {
        let array = los_array(4, 3);
        let model = ScatterModel::line_of_sight();
        let mut last = f64::INFINITY;
        for step in 1..=20 {
            let pos = PointMm::new(100.0 + 150.0 * step as f64, 700.0);
            let m = synth_csi(pos, &array, &model).unwrap();
            let modulus = m.at(0, 0).norm();
            assert!(
                modulus < last,
                "modulus should decay with distance: {modulus} !< {last} at step {step}"
            );
            last = modulus;
        }
    }

    #[test]
    fn mirror_symmetric_positions_share_the_same_channel() {
        // The array lies on the x-axis, so (x, y) and (x, -y) see identical
        // path lengths and therefore identical channel matrices.
        let array = los_array(8, 4);
        let model = ScatterModel::line_of_sight();
        let up = synth_csi(PointMm::new(310.0, 450.0), &array, &model).unwrap();
        let down = synth_csi(PointMm::new(310.0, -450.0), &array, &model).unwrap();
        assert_eq!(up.values(), down.values());
    }

    #[test]
    fn transmitter_on_an_antenna_is_rejected() {
        let array = los_array(4, 2);
        let err = synth_csi(PointMm::new(62.5, 0.0005), &array, &ScatterModel::line_of_sight());
        assert!(matches!(err, Err(CsiError::DegenerateGeometry { .. })), "got {err:?}");
        // 1 mm away is allowed.
        assert!(synth_csi(PointMm::new(62.5, 1.0), &array, &ScatterModel::line_of_sight()).is_ok());
    }

    #[test]
    fn transmitter_on_a_reflector_is_rejected() {
        let array = los_array(2, 2);
        let model = ScatterModel::new(
            vec![Reflector { position: PointMm::new(800.0, 800.0), gain: Complex64::new(0.5, 0.0) }],
            Complex64::new(1.0, 0.0),
            0.0,
        )
        .unwrap();
        let err = synth_csi(PointMm::new(800.0, 800.5), &array, &model);
        assert!(matches!(err, Err(CsiError::DegenerateGeometry { .. })));
    }

    #[test]
    fn synthesis_is_deterministic() {
        let array = los_array(8, 4);
        let model = ScatterModel::new(
            vec![Reflector { position: PointMm::new(-300.0, 900.0), gain: Complex64::new(0.4, 0.2) }],
            Complex64::new(1.0, 0.0),
            0.0,
        )
        .unwrap();
        let a = synth_csi(PointMm::new(123.0, 456.0), &array, &model).unwrap();
        let b = synth_csi(PointMm::new(123.0, 456.0), &array, &model).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn capture_noise_is_seeded_and_optional() {
        let array = los_array(2, 2);
        let positions = [PointMm::new(400.0, 300.0), PointMm::new(500.0, 200.0)];
        let clean = ScatterModel::line_of_sight();
        let noisy = ScatterModel::new(Vec::new(), Complex64::new(1.0, 0.0), 0.05).unwrap();

        let base = synth_samples(&positions, &array, &clean, 1).unwrap();
        let same_seed_a = synth_samples(&positions, &array, &noisy, 9).unwrap();
        let same_seed_b = synth_samples(&positions, &array, &noisy, 9).unwrap();
        let other_seed = synth_samples(&positions, &array, &noisy, 10).unwrap();

        for i in 0..positions.len() {
            assert_eq!(same_seed_a[i].values(), same_seed_b[i].values());
            assert_ne!(same_seed_a[i].values(), base[i].values());
            assert_ne!(same_seed_a[i].values(), other_seed[i].values());
        }
        // Zero noise floor reproduces the deterministic channel exactly.
        let zero = synth_samples(&positions, &array, &clean, 77).unwrap();
        for i in 0..positions.len() {
            assert_eq!(zero[i].values(), base[i].values());
        }
    }

    #[test]
    fn ula_validation_rejects_bent_and_uneven_arrays() {
        let bent = AntennaArray::new(
            vec![PointMm::new(0.0, 0.0), PointMm::new(50.0, 0.0), PointMm::new(100.0, 0.1)],
            2.4e9,
            10.0e6,
            4,
        );
        assert!(matches!(bent, Err(CsiError::NotUniformLinear { .. })));
        let uneven = AntennaArray::new(
            vec![PointMm::new(0.0, 0.0), PointMm::new(50.0, 0.0), PointMm::new(99.0, 0.0)],
            2.4e9,
            10.0e6,
            4,
        );
        assert!(matches!(uneven, Err(CsiError::NotUniformLinear { .. })));
        let ok = AntennaArray::new(
            vec![PointMm::new(0.0, 0.0), PointMm::new(50.0, 0.0), PointMm::new(100.0, 0.0)],
            2.4e9,
            10.0e6,
            4,
        );
        assert!(ok.is_ok());
    }
}
