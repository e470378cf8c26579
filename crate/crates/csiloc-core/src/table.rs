//! Fingerprint tables: the tidy dataset format behind training and
//! simulation.
//!
//! A table holds one row per captured position. Row layout is the polar
//! feature order of [`crate::csi::CsiMatrix::to_polar`] — antenna-major,
//! subcarrier-minor, modulus before argument — followed by the `PosX`/`PosY`
//! labels, giving `2 * antennas * subcarriers + 2` columns in total.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::csi::{feature_column_names, CsiMatrix};
use crate::geom::PointMm;

/// Errors raised while building or reshaping fingerprint tables.
#[derive(Clone, Debug, PartialEq)]
pub enum TableError {
    /// A sample's matrix dimensions disagree with the declared table shape.
    ShapeMismatch {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// A sample arrived without a ground-truth position label.
    MissingPosition { index: usize },
    /// A feature row has the wrong number of columns.
    BadFeatureCount { row: usize, expected: usize, got: usize },
    /// A modulus column holds a negative value.
    NegativeModulus { row: usize, col: usize, value: f64 },
    /// An argument column lies outside `(-pi, pi]`.
    ArgumentOutOfRange { row: usize, col: usize, value: f64 },
    /// A value is NaN or infinite.
    NonFinite { row: usize, col: usize },
    /// Requested antenna subset cannot be cut from this table.
    InvalidSubset { antennas: usize, requested: usize },
    /// Dataset split needs at least 20 rows.
    TooFewRows { rows: usize },
    /// A grid span ends before it starts or has a non-positive step.
    InvalidSpan { detail: &'static str },
}

impl core::fmt::Display for TableError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TableError::ShapeMismatch { index, expected, got } => write!(
                f,
                "sample {index}: expected {}x{} matrix, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            TableError::MissingPosition { index } => {
                write!(f, "sample {index} has no position label")
            }
            TableError::BadFeatureCount { row, expected, got } => {
                write!(f, "row {row}: expected {expected} feature columns, got {got}")
            }
            TableError::NegativeModulus { row, col, value } => {
                write!(f, "row {row} column {col}: modulus {value} is negative")
            }
            TableError::ArgumentOutOfRange { row, col, value } => {
                write!(f, "row {row} column {col}: argument {value} outside (-pi, pi]")
            }
            TableError::NonFinite { row, col } => {
                write!(f, "row {row} column {col}: non-finite value")
            }
            TableError::InvalidSubset { antennas, requested } => write!(
                f,
                "cannot select {requested} antennas from {antennas} (need a positive divisor)"
            ),
            TableError::TooFewRows { rows } => {
                write!(f, "dataset split needs at least 20 rows, table has {rows}")
            }
            TableError::InvalidSpan { detail } => write!(f, "invalid grid span: {detail}"),
        }
    }
}

impl core::error::Error for TableError {}

/// A labelled fingerprint dataset with a fixed antennas x subcarriers shape.
#[derive(Clone, Debug, PartialEq)]
pub struct FingerprintTable {
    antennas: usize,
    subcarriers: usize,
    /// Row-major feature block, `rows * feature_dim` values.
    features: Vec<f64>,
    positions: Vec<PointMm>,
}

impl FingerprintTable {
    /// Build a table from raw feature rows and labels, validating the value
    /// invariants (finite, moduli >= 0, arguments in `(-pi, pi]`).
    pub fn new(
        antennas: usize,
        subcarriers: usize,
        rows: Vec<(Vec<f64>, PointMm)>,
    ) -> Result<Self, TableError> {
        let dim = 2 * antennas * subcarriers;
        let mut features = Vec::with_capacity(rows.len() * dim);
        let mut positions = Vec::with_capacity(rows.len());
        for (row_idx, (row, pos)) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(TableError::BadFeatureCount {
                    row: row_idx,
                    expected: dim,
                    got: row.len(),
                });
            }
            for (col, &v) in row.iter().enumerate() {
                validate_feature(row_idx, col, v)?;
            }
            if !pos.is_finite() {
                return Err(TableError::NonFinite { row: row_idx, col: dim });
            }
            features.extend_from_slice(&row);
            positions.push(pos);
        }
        Ok(Self { antennas, subcarriers, features, positions })
    }

    /// Number of antennas represented in each row.
    pub fn antennas(&self) -> usize {
        self.antennas
    }

    /// Number of subcarriers represented in each row.
    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    /// Feature columns per row (`2 * antennas * subcarriers`).
    pub fn feature_dim(&self) -> usize {
        2 * self.antennas * self.subcarriers
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Feature slice of one row.
    pub fn features(&self, row: usize) -> &[f64] {
        let dim = self.feature_dim();
        &self.features[row * dim..(row + 1) * dim]
    }

    /// Position label of one row.
    pub fn position(&self, row: usize) -> PointMm {
        self.positions[row]
    }

    pub fn positions(&self) -> &[PointMm] {
        &self.positions
    }

    /// Column names including the trailing `PosX`/`PosY` pair.
    pub fn column_names(&self) -> Vec<String> {
        feature_column_names(self.antennas, self.subcarriers)
    }

    /// Per-feature `(min, max)` over all rows. Empty tables yield `(0, 0)`
    /// ranges so downstream scaling degenerates gracefully.
    pub fn feature_ranges(&self) -> Vec<(f64, f64)> {
        let dim = self.feature_dim();
        let mut ranges = alloc::vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
        for row in 0..self.len() {
            for (col, &v) in self.features(row).iter().enumerate() {
                let r = &mut ranges[col];
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        if self.is_empty() {
            ranges.iter_mut().for_each(|r| *r = (0.0, 0.0));
        }
        ranges
    }

    /// Copy a subset of rows (by index) into a new table.
    fn gather(&self, indices: &[usize]) -> Self {
        let dim = self.feature_dim();
        let mut features = Vec::with_capacity(indices.len() * dim);
        let mut positions = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.features(i));
            positions.push(self.positions[i]);
        }
        Self {
            antennas: self.antennas,
            subcarriers: self.subcarriers,
            features,
            positions,
        }
    }
}

fn validate_feature(row: usize, col: usize, v: f64) -> Result<(), TableError> {
    use core::f64::consts::PI;
    if !v.is_finite() {
        return Err(TableError::NonFinite { row, col });
    }
    if col % 2 == 0 {
        if v < 0.0 {
            return Err(TableError::NegativeModulus { row, col, value: v });
        }
    } else if !(v > -PI && v <= PI) {
        return Err(TableError::ArgumentOutOfRange { row, col, value: v });
    }
    Ok(())
}

/// Assemble a fingerprint table from labelled CSI samples.
///
/// All samples must match the declared `antennas` x `subcarriers` shape and
/// carry a position label. An empty sample list yields an empty table that
/// still knows its column layout.
pub fn build_table(
    antennas: usize,
    subcarriers: usize,
    samples: &[CsiMatrix],
) -> Result<FingerprintTable, TableError> {
    let mut rows = Vec::with_capacity(samples.len());
    for (index, sample) in samples.iter().enumerate() {
        if sample.antennas() != antennas || sample.subcarriers() != subcarriers {
            return Err(TableError::ShapeMismatch {
                index,
                expected: (antennas, subcarriers),
                got: (sample.antennas(), sample.subcarriers()),
            });
        }
        let pos = sample.position().ok_or(TableError::MissingPosition { index })?;
        rows.push((sample.to_polar(), pos));
    }
    FingerprintTable::new(antennas, subcarriers, rows)
}

/// Inclusive lattice of positions covering `[x0, x1] x [y0, y1]` at `step`
/// millimetres, in row-major order (y outer, x inner, both ascending).
pub fn grid_positions(
    x_span: (f64, f64),
    y_span: (f64, f64),
    step: f64,
) -> Result<Vec<PointMm>, TableError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(TableError::InvalidSpan { detail: "step must be positive" });
    }
    for span in [x_span, y_span] {
        if !span.0.is_finite() || !span.1.is_finite() {
            return Err(TableError::InvalidSpan { detail: "non-finite span bound" });
        }
        if span.1 < span.0 {
            return Err(TableError::InvalidSpan { detail: "span end before start" });
        }
    }
    // Small forgiveness so spans that are exact multiples of the step do not
    // lose their final lattice line to floating-point rounding.
    let count = |span: (f64, f64)| ((span.1 - span.0) / step + 1e-9).floor() as usize + 1;
    let nx = count(x_span);
    let ny = count(y_span);
    let mut out = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        let y = y_span.0 + iy as f64 * step;
        for ix in 0..nx {
            out.push(PointMm::new(x_span.0 + ix as f64 * step, y));
        }
    }
    Ok(out)
}

/// Keep an evenly strided subset of antennas, starting from the first.
///
/// With `A` antennas and a divisor `n`, the retained one-based antenna
/// indices are `1, 1 + A/n, 1 + 2A/n, ...` — e.g. 8 of 64 keeps antennas
/// 1, 9, 17, ..., 57. Feature columns move with their antennas; positions
/// are untouched.
pub fn subset_antennas(
    table: &FingerprintTable,
    keep: usize,
) -> Result<FingerprintTable, TableError> {
    let total = table.antennas();
    if keep == 0 || keep > total || total % keep != 0 {
        return Err(TableError::InvalidSubset { antennas: total, requested: keep });
    }
    let stride = total / keep;
    let per_antenna = 2 * table.subcarriers();
    let old_dim = table.feature_dim();
    let new_dim = keep * per_antenna;

    let mut features = Vec::with_capacity(table.len() * new_dim);
    for row in 0..table.len() {
        let old = table.features(row);
        for a in 0..keep {
            let start = a * stride * per_antenna;
            features.extend_from_slice(&old[start..start + per_antenna]);
        }
        debug_assert_eq!(old.len(), old_dim);
    }
    Ok(FingerprintTable {
        antennas: keep,
        subcarriers: table.subcarriers(),
        features,
        positions: table.positions.clone(),
    })
}

/// One-based antenna indices retained by [`subset_antennas`].
pub fn subset_antenna_indices(total: usize, keep: usize) -> Result<Vec<usize>, TableError> {
    if keep == 0 || keep > total || total % keep != 0 {
        return Err(TableError::InvalidSubset { antennas: total, requested: keep });
    }
    let stride = total / keep;
    Ok((0..keep).map(|i| 1 + i * stride).collect())
}

/// Result of a dataset split; rows keep their original order within a part.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub train: FingerprintTable,
    pub validation: FingerprintTable,
    pub test: FingerprintTable,
    /// Original row indices of each part, in the order they were gathered.
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Shuffle rows with a seeded generator and split 85% / 10% / 5% into
/// train / validation / test.
///
/// Counts are `round(0.85 N)` and `round(0.10 N)` with half-up rounding; the
/// test part takes the remainder, so every row lands in exactly one part.
/// Requires at least 20 rows so no part can be empty.
pub fn split(table: &FingerprintTable, seed: u64) -> Result<DatasetSplit, TableError> {
    let n = table.len();
    if n < 20 {
        return Err(TableError::TooFewRows { rows: n });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);

    let round_half_up = |x: f64| (x + 0.5).floor() as usize;
    let n_train = round_half_up(0.85 * n as f64);
    let n_val = round_half_up(0.10 * n as f64);
    let n_test = n - n_train - n_val;
    debug_assert!(n_train >= 1 && n_val >= 1 && n_test >= 1);

    let train_indices = indices[..n_train].to_vec();
    let validation_indices = indices[n_train..n_train + n_val].to_vec();
    let test_indices = indices[n_train + n_val..].to_vec();
    Ok(DatasetSplit {
        train: table.gather(&train_indices),
        validation: table.gather(&validation_indices),
        test: table.gather(&test_indices),
        train_indices,
        validation_indices,
        test_indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csi::{synth_samples, AntennaArray, ScatterModel};
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn demo_table(rows: usize) -> FingerprintTable {
        let array = AntennaArray::ula(
            PointMm::new(0.0, -100.0),
            PointMm::new(60.0, 0.0),
            4,
            2.4e9,
            10.0e6,
            3,
        )
        .unwrap();
        let positions: Vec<PointMm> = (0..rows)
            .map(|i| PointMm::new(50.0 + 10.0 * i as f64, 200.0 + 5.0 * i as f64))
            .collect();
        let samples = synth_samples(&positions, &array, &ScatterModel::line_of_sight(), 0).unwrap();
        build_table(4, 3, &samples).unwrap()
    }

    #[test]
    fn table_reproduces_published_fingerprint_rows() {
        // Two rows of a 1-antenna, 2-subcarrier table with known polar
        // values; building from the equivalent complex entries must get the
        // same numbers back in the documented column order.
        let entry = |m: f64, phi: f64| Complex64::from_polar(m, phi);
        let samples = vec![
            CsiMatrix::new(
                1,
                2,
                vec![entry(0.234, 0.643), entry(0.275, 0.631)],
                Some(PointMm::new(302.0, 2391.0)),
            )
            .unwrap(),
            CsiMatrix::new(
                1,
                2,
                vec![entry(0.214, 0.701), entry(0.244, 0.699)],
                Some(PointMm::new(-1215.0, 427.0)),
            )
            .unwrap(),
        ];
        let table = build_table(1, 2, &samples).unwrap();
        assert_eq!(
            table.column_names(),
            vec!["A1S1-m", "A1S1-φ", "A1S2-m", "A1S2-φ", "PosX", "PosY"]
        );
        let row0 = table.features(0);
        for (got, want) in row0.iter().zip(&[0.234, 0.643, 0.275, 0.631]) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
        assert_eq!(table.position(0), PointMm::new(302.0, 2391.0));
        assert_eq!(table.position(1), PointMm::new(-1215.0, 427.0));
        assert_eq!(table.feature_dim(), 4);
    }

    #[test]
    fn empty_sample_list_gives_an_empty_table_with_columns() {
        let table = build_table(2, 3, &[]).unwrap();
        assert!(table.is_empty());
        assert_eq!(table.feature_dim(), 12);
        assert_eq!(table.column_names().len(), 14);
    }

    #[test]
    fn mismatched_sample_shape_is_reported_with_its_index() {
        let ok = CsiMatrix::new(1, 2, vec![Complex64::new(1.0, 0.0); 2], Some(PointMm::new(0.0, 0.0))).unwrap();
        let bad = CsiMatrix::new(2, 2, vec![Complex64::new(1.0, 0.0); 4], Some(PointMm::new(0.0, 0.0))).unwrap();
        let err = build_table(1, 2, &[ok, bad]).unwrap_err();
        assert_eq!(
            err,
            TableError::ShapeMismatch { index: 1, expected: (1, 2), got: (2, 2) }
        );
    }

    #[test]
    fn unlabelled_sample_is_rejected() {
        let anon = CsiMatrix::new(1, 1, vec![Complex64::new(1.0, 0.0)], None).unwrap();
        let err = build_table(1, 1, &[anon]).unwrap_err();
        assert_eq!(err, TableError::MissingPosition { index: 0 });
    }

    #[test]
    fn value_invariants_are_enforced() {
        let bad_modulus = FingerprintTable::new(
            1,
            1,
            vec![(alloc::vec![-0.1, 0.0], PointMm::new(0.0, 0.0))],
        );
        assert!(matches!(bad_modulus, Err(TableError::NegativeModulus { row: 0, col: 0, .. })));
        let bad_arg = FingerprintTable::new(
            1,
            1,
            vec![(alloc::vec![1.0, -core::f64::consts::PI], PointMm::new(0.0, 0.0))],
        );
        assert!(matches!(bad_arg, Err(TableError::ArgumentOutOfRange { row: 0, col: 1, .. })));
    }

    #[test]
    fn grid_covers_the_span_inclusively_in_row_major_order() {
        let grid = grid_positions((0.0, 10.0), (0.0, 5.0), 5.0).unwrap();
        assert_eq!(
            grid,
            vec![
                PointMm::new(0.0, 0.0),
                PointMm::new(5.0, 0.0),
                PointMm::new(10.0, 0.0),
                PointMm::new(0.0, 5.0),
                PointMm::new(5.0, 5.0),
                PointMm::new(10.0, 5.0),
            ]
        );
    }

    #[test]
    fn survey_scale_grid_has_the_expected_point_count() {
        // A 2505 mm square at 5 mm pitch: 502 lattice lines per axis.
        let grid = grid_positions((0.0, 2505.0), (0.0, 2505.0), 5.0).unwrap();
        assert_eq!(grid.len(), 252_004);
        assert_eq!(grid.len(), 502 * 502);
    }

    #[test]
    fn invalid_spans_are_rejected() {
        assert!(matches!(
            grid_positions((10.0, 0.0), (0.0, 5.0), 5.0),
            Err(TableError::InvalidSpan { .. })
        ));
        assert!(matches!(
            grid_positions((0.0, 10.0), (0.0, 5.0), 0.0),
            Err(TableError::InvalidSpan { .. })
        ));
    }

    #[test]
    fn antenna_subset_keeps_the_documented_stride() {
        assert_eq!(
            subset_antenna_indices(64, 8).unwrap(),
            vec![1, 9, 17, 25, 33, 41, 49, 57]
        );
        assert_eq!(subset_antenna_indices(4, 4).unwrap(), vec![1, 2, 3, 4]);
    }

    #[test]
    fn antenna_subset_moves_feature_columns_intact() {
        let table = demo_table(6);
        let half = subset_antennas(&table, 2).unwrap();
        assert_eq!(half.antennas(), 2);
        assert_eq!(half.feature_dim(), 2 * 2 * 3);
        // Kept antennas are 1 and 3 (stride 2): compare column blocks.
        let per_antenna = 2 * table.subcarriers();
        for row in 0..table.len() {
            let full = table.features(row);
            let cut = half.features(row);
            assert_eq!(&cut[..per_antenna], &full[..per_antenna]);
            assert_eq!(&cut[per_antenna..], &full[2 * per_antenna..3 * per_antenna]);
            assert_eq!(half.position(row), table.position(row));
        }
    }

    #[test]
    fn full_subset_is_identity() {
        let table = demo_table(5);
        let same = subset_antennas(&table, 4).unwrap();
        assert_eq!(same, table);
    }

    #[test]
    fn bad_subsets_are_rejected() {
        let table = demo_table(3);
        for keep in [0, 3, 5, 8] {
            assert!(
                matches!(subset_antennas(&table, keep), Err(TableError::InvalidSubset { .. })),
                "keep={keep} should be invalid for 4 antennas"
            );
        }
    }

    #[test]
    fn split_counts_follow_half_up_rounding() {
        let table = demo_table(20);
        let parts = split(&table, 1).unwrap();
        assert_eq!(
            (parts.train.len(), parts.validation.len(), parts.test.len()),
            (17, 2, 1)
        );
    }

    #[test]
    fn split_is_a_partition() {
        let table = demo_table(53);
        let parts = split(&table, 99).unwrap();
        let mut seen: Vec<usize> = parts
            .train_indices
            .iter()
            .chain(&parts.validation_indices)
            .chain(&parts.test_indices)
            .copied()
            .collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..53).collect::<Vec<_>>());
        assert_eq!(
            parts.train.len() + parts.validation.len() + parts.test.len(),
            table.len()
        );
    }

    #[test]
    fn split_is_seed_deterministic() {
        let table = demo_table(40);
        let a = split(&table, 7).unwrap();
        let b = split(&table, 7).unwrap();
        let c = split(&table, 8).unwrap();
        assert_eq!(a.train_indices, b.train_indices);
        assert_eq!(a.test_indices, b.test_indices);
        assert_ne!(a.train_indices, c.train_indices);
    }

    #[test]
    fn split_rejects_tiny_tables() {
        let table = demo_table(19);
        assert_eq!(split(&table, 0).unwrap_err(), TableError::TooFewRows { rows: 19 });
    }

    #[test]
    fn feature_ranges_are_per_column_min_max() {
        let rows = vec![
            (alloc::vec![1.0, 0.5, 3.0, -0.5], PointMm::new(0.0, 0.0)),
            (alloc::vec![2.0, -0.25, 1.0, 0.75], PointMm::new(1.0, 1.0)),
        ];
        let table = FingerprintTable::new(1, 2, rows).unwrap();
        assert_eq!(
            table.feature_ranges(),
            vec![(1.0, 2.0), (-0.25, 0.5), (1.0, 3.0), (-0.5, 0.75)]
        );
    }
}
