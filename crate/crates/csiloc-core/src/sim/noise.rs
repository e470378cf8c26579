//! Range-proportional Gaussian noise over polar feature rows.
//!
//! The noise model perturbs each feature column independently with zero-mean
//! Gaussian noise whose standard deviation is a fixed fraction of that
//! column's observed range in the fingerprint table. Modulus columns are
//! clamped at zero and argument columns re-wrapped into `(-pi, pi]`, so a
//! noisy row still satisfies the table's value invariants.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::csi::wrap_angle;
use crate::rng::GaussSource;

/// Noise intensity tiers: the standard deviation as a fraction of each
/// feature's range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseLevel {
    None,
    Low,
    Medium,
    High,
}

impl NoiseLevel {
    /// Fraction of the feature range used as the noise standard deviation.
    pub fn fraction(&self) -> f64 {
        match self {
            NoiseLevel::None => 0.0,
            NoiseLevel::Low => 0.10,
            NoiseLevel::Medium => 0.20,
            NoiseLevel::High => 0.30,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            NoiseLevel::None => "None",
            NoiseLevel::Low => "Low",
            NoiseLevel::Medium => "Medium",
            NoiseLevel::High => "High",
        }
    }

    pub fn all() -> [NoiseLevel; 4] {
        [NoiseLevel::None, NoiseLevel::Low, NoiseLevel::Medium, NoiseLevel::High]
    }
}

/// A noise level plus the seed that makes a run reproducible.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub level: NoiseLevel,
    pub seed: u64,
}

/// Stateful injector for a sequence of rows (each row draws fresh noise
/// from the seeded stream). Level `None` copies rows verbatim without
/// consuming randomness.
pub struct NoiseInjector {
    level: NoiseLevel,
    /// Per-feature standard deviations, `fraction * (max - min)`.
    sigmas: Vec<f64>,
    gauss: GaussSource,
}

impl NoiseInjector {
    /// `ranges` are per-feature `(min, max)` pairs, normally
    /// [`crate::table::FingerprintTable::feature_ranges`].
    pub fn new(spec: NoiseSpec, ranges: &[(f64, f64)]) -> Result<Self, SimError> {
        if ranges.is_empty() {
            return Err(SimError::RangeMissing { expected: 1, got: 0 });
        }
        for &(lo, hi) in ranges {
            if !(lo.is_finite() && hi.is_finite() && hi >= lo) {
                return Err(SimError::BadParameter { what: "feature range must be finite and ordered" });
            }
        }
        let fraction = spec.level.fraction();
        let sigmas = ranges.iter().map(|&(lo, hi)| fraction * (hi - lo)).collect();
        Ok(Self { level: spec.level, sigmas, gauss: GaussSource::new(spec.seed) })
    }

    pub fn level(&self) -> NoiseLevel {
        self.level
    }

    /// Per-feature noise standard deviations.
    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    /// Perturb one feature row (even columns moduli, odd columns
    /// arguments). Level `None` returns the row unchanged.
    pub fn apply(&mut self, row: &[f64]) -> Result<Vec<f64>, SimError> {
        if row.len() != self.sigmas.len() {
            return Err(SimError::RangeMissing { expected: row.len(), got: self.sigmas.len() });
        }
        if self.level == NoiseLevel::None {
            return Ok(row.to_vec());
        }
        Ok(row
            .iter()
            .zip(&self.sigmas)
            .enumerate()
            .map(|(col, (&v, &sigma))| {
                let noisy = v + sigma * self.gauss.next();
                if col % 2 == 0 {
                    noisy.max(0.0)
                } else {
                    wrap_angle(noisy)
                }
            })
            .collect())
    }
}

/// One-shot convenience over [`NoiseInjector`] for a single row.
pub fn add_noise(
    row: &[f64],
    spec: NoiseSpec,
    ranges: &[(f64, f64)],
) -> Result<Vec<f64>, SimError> {
    NoiseInjector::new(spec, ranges)?.apply(row)
}
