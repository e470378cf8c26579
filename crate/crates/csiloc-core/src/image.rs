//! Fingerprint-to-image encoding.
//!
//! Tabular CSI rows are turned into small grayscale images so a CNN can read
//! them: each feature column gets a fixed pixel, assigned once from the
//! training split and reused verbatim afterwards. The assignment projects
//! the *transposed* training matrix — every feature column becomes an
//! observation whose coordinates are its values over the training rows —
//! onto its first two principal components, then translates and scales the
//! scores to fill the image square. Rendering paints each row's normalised
//! values at their pixels (averaging collisions) and applies a truncated
//! Gaussian blur so neighbouring pixels share information.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::pca::leading_scores;
use crate::table::FingerprintTable;

/// Errors from layout fitting and rendering.
#[derive(Clone, Debug, PartialEq)]
pub enum ImageError {
    /// Fewer than two feature columns or an empty training table.
    NotEnoughData { detail: &'static str },
    /// Every feature projects to the same point; no layout exists.
    DegenerateSpread,
    /// Image side too small to be meaningful.
    BadImageSide { side: usize },
    /// Blur standard deviation must be positive and finite.
    InvalidSigma { sigma: f64 },
    /// A row's length disagrees with the layout.
    LengthMismatch { expected: usize, got: usize },
    /// A dataset render failed at a specific row.
    AtRow { row: usize, source: Box<ImageError> },
}

impl core::fmt::Display for ImageError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ImageError::NotEnoughData { detail } => write!(f, "cannot fit layout: {detail}"),
            ImageError::DegenerateSpread => {
                write!(f, "all features project to a single point; no layout exists")
            }
            ImageError::BadImageSide { side } => {
                write!(f, "image side must be at least 3, got {side}")
            }
            ImageError::InvalidSigma { sigma } => {
                write!(f, "blur sigma must be positive and finite, got {sigma}")
            }
            ImageError::LengthMismatch { expected, got } => {
                write!(f, "feature row has {got} values, layout expects {expected}")
            }
            ImageError::AtRow { row, source } => write!(f, "row {row}: {source}"),
        }
    }
}

impl core::error::Error for ImageError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            ImageError::AtRow { source, .. } => Some(source),
            _ => None,
        }
    }
}

/// Truncated Gaussian blur parameters.
///
/// The kernel has radius `ceil(3 sigma)` and is renormalised to sum to one,
/// so blurring is mass-preserving away from the image border. As
/// `sigma -> 0` it degenerates to the identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlurSpec {
    sigma: f64,
}

impl BlurSpec {
    pub fn new(sigma: f64) -> Result<Self, ImageError> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(ImageError::InvalidSigma { sigma });
        }
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Kernel half-width in pixels.
    pub fn radius(&self) -> usize {
        (3.0 * self.sigma).ceil() as usize
    }

    /// Row-major `(2r+1) x (2r+1)` kernel, normalised to sum to one.
    pub fn kernel(&self) -> Vec<f64> {
        let r = self.radius() as isize;
        let size = (2 * r + 1) as usize;
        let mut k = Vec::with_capacity(size * size);
        let denom = 2.0 * self.sigma * self.sigma;
        for dy in -r..=r {
            for dx in -r..=r {
                k.push((-((dx * dx + dy * dy) as f64) / denom).exp());
            }
        }
        let sum: f64 = k.iter().sum();
        for v in &mut k {
            *v /= sum;
        }
        k
    }
}

/// Fixed feature-to-pixel assignment plus the training statistics needed to
/// normalise rows at render time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureLayout {
    image_side: usize,
    /// Per-feature `(row, col)` pixel, same order as the feature columns.
    pixels: Vec<(u32, u32)>,
    /// Per-feature `(min, max)` over the training split.
    fit_stats: Vec<(f64, f64)>,
}

impl FeatureLayout {
    /// Assemble a layout from parts (deserialisation path); validates that
    /// pixels fit the image and lengths agree.
    pub fn from_parts(
        image_side: usize,
        pixels: Vec<(u32, u32)>,
        fit_stats: Vec<(f64, f64)>,
    ) -> Result<Self, ImageError> {
        if image_side < 3 {
            return Err(ImageError::BadImageSide { side: image_side });
        }
        if pixels.len() != fit_stats.len() || pixels.is_empty() {
            return Err(ImageError::LengthMismatch { expected: pixels.len(), got: fit_stats.len() });
        }
        for &(r, c) in &pixels {
            if r as usize >= image_side || c as usize >= image_side {
                return Err(ImageError::BadImageSide { side: image_side });
            }
        }
        Ok(Self { image_side, pixels, fit_stats })
    }

    pub fn image_side(&self) -> usize {
        self.image_side
    }

    /// Number of feature columns the layout covers.
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    /// Pixel `(row, col)` of feature `i`.
    pub fn pixel(&self, i: usize) -> (u32, u32) {
        self.pixels[i]
    }

    pub fn pixels(&self) -> &[(u32, u32)] {
        &self.pixels
    }

    pub fn fit_stats(&self) -> &[(f64, f64)] {
        &self.fit_stats
    }

    /// Min-max normalise a feature row with the training statistics,
    /// clamping to `[0, 1]`; zero-span features map to 0.
    pub fn normalise_row(&self, row: &[f64]) -> Result<Vec<f64>, ImageError> {
        if row.len() != self.pixels.len() {
            return Err(ImageError::LengthMismatch { expected: self.pixels.len(), got: row.len() });
        }
        Ok(row
            .iter()
            .zip(&self.fit_stats)
            .map(|(&v, &(lo, hi))| {
                let span = hi - lo;
                if span > 0.0 {
                    ((v - lo) / span).max(0.0).min(1.0)
                } else {
                    0.0
                }
            })
            .collect())
    }
}

/// A rendered grayscale image with values in `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticImage {
    side: usize,
    pixels: Vec<f64>,
}

impl SyntheticImage {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.side + col]
    }
}

/// Fit the feature-to-pixel assignment on the training split.
///
/// Deterministic: principal axes are computed by a fixed-order Jacobi sweep
/// with a fixed eigenvector sign convention, scores are scaled per axis to
/// `[0, side-1]` and rounded half-away-from-zero to pixel indices. The first
/// score drives the column, the second the row. An axis with zero spread
/// (e.g. a rank-one feature set) centres on the middle pixel. Fails with
/// [`ImageError::DegenerateSpread`] when every feature column is identical.
pub fn fit_layout(train: &FingerprintTable, image_side: usize) -> Result<FeatureLayout, ImageError> {
    if image_side < 3 {
        return Err(ImageError::BadImageSide { side: image_side });
    }
    if train.is_empty() {
        return Err(ImageError::NotEnoughData { detail: "empty training table" });
    }
    let dim = train.feature_dim();
    if dim < 2 {
        return Err(ImageError::NotEnoughData { detail: "need at least two feature columns" });
    }

    // Transpose: one observation per feature column.
    let observations: Vec<Vec<f64>> = (0..dim)
        .map(|col| (0..train.len()).map(|row| train.features(row)[col]).collect())
        .collect();
    let scores = leading_scores(&observations).ok_or(ImageError::DegenerateSpread)?;

    let last = (image_side - 1) as f64;
    let centre = (last / 2.0).round() as u32;
    let axis_pixel = |axis: usize| -> Vec<u32> {
        let values: Vec<f64> = scores.scores.iter().map(|s| s[axis]).collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        if span <= 0.0 {
            return vec![centre; values.len()];
        }
        values
            .iter()
            .map(|v| (((v - lo) / span) * last).round() as u32)
            .collect()
    };
    let cols = axis_pixel(0);
    let rows = axis_pixel(1);
    let pixels: Vec<(u32, u32)> = rows.into_iter().zip(cols).collect();

    FeatureLayout::from_parts(image_side, pixels, train.feature_ranges())
}

/// Render one feature row into an image.
///
/// Values are min-max normalised with the layout's training statistics and
/// clamped to `[0, 1]`; features sharing a pixel are averaged; the blurred
/// result is clamped to `[0, 1]` again as a guard.
pub fn render(
    row: &[f64],
    layout: &FeatureLayout,
    blur: &BlurSpec,
) -> Result<SyntheticImage, ImageError> {
    let side = layout.image_side();
    let normalised = layout.normalise_row(row)?;

    let mut acc = vec![0.0f64; side * side];
    let mut count = vec![0u32; side * side];
    for (i, v) in normalised.iter().enumerate() {
        let (r, c) = layout.pixel(i);
        let idx = r as usize * side + c as usize;
        acc[idx] += v;
        count[idx] += 1;
    }
    for (a, &n) in acc.iter_mut().zip(&count) {
        if n > 0 {
            *a /= n as f64;
        }
    }

    // Truncated Gaussian blur with zero padding outside the image.
    let kernel = blur.kernel();
    let r = blur.radius() as isize;
    let k_side = (2 * r + 1) as usize;
    let mut out = vec![0.0f64; side * side];
    let side_i = side as isize;
    for y in 0..side_i {
        for x in 0..side_i {
            let mut sum = 0.0;
            for dy in -r..=r {
                let sy = y + dy;
                if sy < 0 || sy >= side_i {
                    continue;
                }
                let k_row = ((dy + r) as usize) * k_side;
                for dx in -r..=r {
                    let sx = x + dx;
                    if sx < 0 || sx >= side_i {
                        continue;
                    }
                    sum += kernel[k_row + (dx + r) as usize] * acc[(sy * side_i + sx) as usize];
                }
            }
            out[(y * side_i + x) as usize] = sum.max(0.0).min(1.0);
        }
    }
    Ok(SyntheticImage { side, pixels: out })
}

/// Render every row of a table, tagging failures with their row index.
pub fn render_dataset(
    table: &FingerprintTable,
    layout: &FeatureLayout,
    blur: &BlurSpec,
) -> Result<Vec<SyntheticImage>, ImageError> {
    (0..table.len())
        .map(|row| {
            render(table.features(row), layout, blur)
                .map_err(|source| ImageError::AtRow { row, source: Box::new(source) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::PointMm;
    use approx::assert_abs_diff_eq;

    /// A tiny 1x2 table (4 feature columns) with hand-picked values.
    ///
    /// Viewed as observations over the 2 rows, the feature columns are
    /// (0.1, 0.1), (0.5, 0.1), (0.1, 0.3), (0.5, 0.3): the corners of a
    /// rectangle with distinct side lengths, so the principal axes are
    /// unique and the scores are the centred coordinates.
    fn corner_table() -> FingerprintTable {
        FingerprintTable::new(
            1,
            2,
            vec![
                (vec![0.1, 0.5, 0.1, 0.5], PointMm::new(0.0, 0.0)),
                (vec![0.1, 0.1, 0.3, 0.3], PointMm::new(10.0, 10.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn blur_kernel_is_normalised_and_truncated() {
        let blur = BlurSpec::new(1.0).unwrap();
        assert_eq!(blur.radius(), 3);
        let k = blur.kernel();
        assert_eq!(k.len(), 49);
        let sum: f64 = k.iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-12);
        // Centre dominates and symmetry holds.
        let centre = k[3 * 7 + 3];
        assert!(k.iter().all(|&v| v <= centre));
        assert_abs_diff_eq!(k[0], k[48], epsilon = 1e-15);
    }

    #[test]
    fn invalid_sigma_is_rejected() {
        assert!(matches!(BlurSpec::new(0.0), Err(ImageError::InvalidSigma { .. })));
        assert!(matches!(BlurSpec::new(-1.0), Err(ImageError::InvalidSigma { .. })));
        assert!(matches!(BlurSpec::new(f64::NAN), Err(ImageError::InvalidSigma { .. })));
    }

    #[test]
    fn corner_features_land_on_distinct_image_corners() {
        // Per-axis min-max scaling pins the rectangle's corner scores to the
        // four image corners (axis mirroring from the sign convention only
        // permutes which corner is which).
        let layout = fit_layout(&corner_table(), 35).unwrap();
        let mut pixels: Vec<(u32, u32)> = layout.pixels().to_vec();
        pixels.sort_unstable();
        assert_eq!(pixels, vec![(0, 0), (0, 34), (34, 0), (34, 34)]);
    }

    #[test]
    fn layout_fitting_is_repeatable() {
        let table = corner_table();
        let a = fit_layout(&table, 35).unwrap();
        let b = fit_layout(&table, 35).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn constant_table_has_no_layout() {
        let table = FingerprintTable::new(
            1,
            2,
            vec![
                (vec![0.5, 0.5, 0.5, 0.5], PointMm::new(0.0, 0.0)),
                (vec![0.5, 0.5, 0.5, 0.5], PointMm::new(1.0, 1.0)),
            ],
        )
        .unwrap();
        assert!(matches!(fit_layout(&table, 35), Err(ImageError::DegenerateSpread)));
    }

    #[test]
    fn rank_one_spread_centres_the_second_axis() {
        // Features varying along a single direction: the second principal
        // axis has zero spread, so rows collapse to the centre row.
        let table = FingerprintTable::new(
            1,
            2,
            vec![
                (vec![0.0, 0.1, 0.2, 0.3], PointMm::new(0.0, 0.0)),
                (vec![0.0, 0.2, 0.4, 0.6], PointMm::new(1.0, 1.0)),
            ],
        )
        .unwrap();
        let layout = fit_layout(&table, 35).unwrap();
        let rows: Vec<u32> = layout.pixels().iter().map(|p| p.0).collect();
        assert_eq!(rows, vec![17, 17, 17, 17]);
        // Columns still span the image.
        let cols: Vec<u32> = layout.pixels().iter().map(|p| p.1).collect();
        assert!(cols.contains(&0) && cols.contains(&34));
    }

    #[test]
    fn single_hot_pixel_blurs_into_the_kernel() {
        // One feature at full scale in the image centre: after blurring, the
        // image must equal the kernel stamped at that pixel.
        let layout = FeatureLayout::from_parts(
            9,
            vec![(4, 4)],
            vec![(0.0, 1.0)],
        )
        .unwrap();
        let blur = BlurSpec::new(1.0).unwrap();
        let img = render(&[1.0], &layout, &blur).unwrap();
        let kernel = blur.kernel();
        let r = blur.radius() as isize;
        for dy in -r..=r {
            for dx in -r..=r {
                let k = kernel[((dy + r) * (2 * r + 1) + (dx + r)) as usize];
                let got = img.at((4 + dy) as usize, (4 + dx) as usize);
                assert_abs_diff_eq!(got, k, epsilon = 1e-12);
            }
        }
        // Off-kernel pixels are exactly zero.
        assert_eq!(img.at(0, 8), 0.0);
    }

    #[test]
    fn near_zero_sigma_is_the_identity_stamp() {
        let layout = FeatureLayout::from_parts(
            7,
            vec![(3, 3), (1, 5)],
            vec![(0.0, 1.0), (0.0, 1.0)],
        )
        .unwrap();
        let blur = BlurSpec::new(0.01).unwrap();
        let img = render(&[1.0, 0.25], &layout, &blur).unwrap();
        assert_abs_diff_eq!(img.at(3, 3), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(img.at(1, 5), 0.25, epsilon = 1e-12);
        let total: f64 = img.pixels().iter().sum();
        assert_abs_diff_eq!(total, 1.25, epsilon = 1e-9);
    }

    #[test]
    fn colliding_features_average() {
        let layout = FeatureLayout::from_parts(
            7,
            vec![(3, 3), (3, 3), (3, 3)],
            vec![(0.0, 1.0); 3],
        )
        .unwrap();
        let blur = BlurSpec::new(0.01).unwrap();
        let img = render(&[0.2, 0.4, 0.9], &layout, &blur).unwrap();
        assert_abs_diff_eq!(img.at(3, 3), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn interior_blur_preserves_mass() {
        // All stamped pixels at least one radius from the border: the
        // normalised kernel redistributes but does not lose value.
        let layout = FeatureLayout::from_parts(
            11,
            vec![(5, 5), (4, 6)],
            vec![(0.0, 1.0), (0.0, 1.0)],
        )
        .unwrap();
        let blur = BlurSpec::new(0.8).unwrap();
        let img = render(&[0.7, 0.3], &layout, &blur).unwrap();
        let total: f64 = img.pixels().iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn normalisation_uses_fit_stats_and_clamps() {
        let layout = FeatureLayout::from_parts(
            5,
            vec![(0, 0), (0, 1), (0, 2)],
            vec![(1.0, 3.0), (0.0, 0.0), (-1.0, 1.0)],
        )
        .unwrap();
        // Value above max clamps to 1; zero-span maps to 0; mid-range maps
        // linearly.
        let n = layout.normalise_row(&[5.0, 42.0, 0.0]).unwrap();
        assert_eq!(n, vec![1.0, 0.0, 0.5]);
    }

    #[test]
    fn wrong_row_length_is_reported() {
        let layout = FeatureLayout::from_parts(5, vec![(0, 0)], vec![(0.0, 1.0)]).unwrap();
        let blur = BlurSpec::new(1.0).unwrap();
        let err = render(&[1.0, 2.0], &layout, &blur).unwrap_err();
        assert!(matches!(err, ImageError::LengthMismatch { expected: 1, got: 2 }));
    }

    #[test]
    fn dataset_render_reports_failing_row() {
        // A layout narrower than the table rows fails for every row; the
        // first failure carries row index 0.
        let table = corner_table();
        let layout = FeatureLayout::from_parts(5, vec![(0, 0)], vec![(0.0, 1.0)]).unwrap();
        let blur = BlurSpec::new(1.0).unwrap();
        let err = render_dataset(&table, &layout, &blur).unwrap_err();
        match err {
            ImageError::AtRow { row, source } => {
                assert_eq!(row, 0);
                assert!(matches!(*source, ImageError::LengthMismatch { .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn render_is_deterministic_and_bounded() {
        let table = corner_table();
        let layout = fit_layout(&table, 35).unwrap();
        let blur = BlurSpec::new(1.0).unwrap();
        let a = render_dataset(&table, &layout, &blur).unwrap();
        let b = render_dataset(&table, &layout, &blur).unwrap();
        assert_eq!(a, b);
        for img in &a {
            assert_eq!(img.pixels().len(), 35 * 35);
            assert!(img.pixels().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
