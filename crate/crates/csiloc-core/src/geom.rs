//! Plane geometry primitives shared across the pipeline.
//!
//! All coordinates are millimetres in the dataset frame (the frame the
//! fingerprint positions are labelled in).

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

/// A 2D point in millimetres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMm {
    pub x: f64,
    pub y: f64,
}

impl PointMm {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Euclidean distance to `other`, in millimetres.
    pub fn distance(&self, other: &PointMm) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned rectangle, used for the measurement area and route bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: PointMm,
    pub max: PointMm,
}

impl Bounds {
    pub const fn new(min: PointMm, max: PointMm) -> Self {
        Self { min, max }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    /// True when the rectangle has positive area and finite corners.
    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.width() > 0.0 && self.height() > 0.0
    }

    pub fn contains(&self, p: &PointMm) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Clamp a point into the rectangle.
    pub fn clamp(&self, p: PointMm) -> PointMm {
        PointMm::new(
            p.x.max(self.min.x).min(self.max.x),
            p.y.max(self.min.y).min(self.max.y),
        )
    }
}

/// Mean Euclidean distance between paired true and estimated positions.
///
/// This is the evaluation metric used throughout: `ME = E{ |p - p_hat| }`
/// with the expectation taken over the trajectory instants. Returns 0 for
/// empty input; panics if the slices disagree in length.
pub fn mean_error(truth: &[PointMm], estimate: &[PointMm]) -> f64 {
    assert_eq!(
        truth.len(),
        estimate.len(),
        "mean_error: {} truths vs {} estimates",
        truth.len(),
        estimate.len()
    );
    if truth.is_empty() {
        return 0.0;
    }
    let total: f64 = truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| t.distance(e))
        .sum();
    total / truth.len() as f64
}
