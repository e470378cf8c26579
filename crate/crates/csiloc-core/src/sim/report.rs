//! Mean-error result grids: rows are (noise level, filter on/off) pairs,
//! columns are antenna counts.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::noise::NoiseLevel;
use super::route::RouteKind;
use super::SimError;

/// Key of one grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub noise: NoiseLevel,
    pub kalman: bool,
    pub antennas: usize,
}

/// One mean-error cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub key: CellKey,
    pub mean_error_mm: f64,
}

/// The complete mean-error grid of one experiment, in row-major order:
/// noise levels outermost, then filter off/on, then antenna counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub kind: RouteKind,
    pub noise_levels: Vec<NoiseLevel>,
    pub antenna_counts: Vec<usize>,
    pub cells: Vec<ReportCell>,
}

impl EvalReport {
    pub fn cell(&self, noise: NoiseLevel, kalman: bool, antennas: usize) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.key.noise == noise && c.key.kalman == kalman && c.key.antennas == antennas)
            .map(|c| c.mean_error_mm)
    }

    /// Filter labels in row order.
    pub fn kalman_labels() -> [&'static str; 2] {
        ["No", "Yes"]
    }
}

/// Assemble measured cells into the canonical grid, insisting on exactly
/// one finite, non-negative value per (noise, filter, antennas) key.
pub fn build_report(
    kind: RouteKind,
    noise_levels: &[NoiseLevel],
    antenna_counts: &[usize],
    results: &[(CellKey, f64)],
) -> Result<EvalReport, SimError> {
    if noise_levels.is_empty() || antenna_counts.is_empty() {
        return Err(SimError::BadParameter { what: "report axes must be non-empty" });
    }
    let mut cells = Vec::with_capacity(noise_levels.len() * 2 * antenna_counts.len());
    for &noise in noise_levels {
        for kalman in [false, true] {
            for &antennas in antenna_counts {
                let mut matches = results.iter().filter(|(k, _)| {
                    k.noise == noise && k.kalman == kalman && k.antennas == antennas
                });
                let (key, value) = match (matches.next(), matches.next()) {
                    (Some(&cell), None) => cell,
                    (None, _) => {
                        return Err(SimError::IncompleteGrid {
                            noise: noise.label(),
                            kalman,
                            antennas,
                        });
                    }
                    (Some(_), Some(_)) => {
                        return Err(SimError::DuplicateCell {
                            noise: noise.label(),
                            kalman,
                            antennas,
                        });
                    }
                };
                if !(value.is_finite() && value >= 0.0) {
                    return Err(SimError::BadCell { noise: noise.label(), kalman, antennas });
                }
                cells.push(ReportCell { key, mean_error_mm: value });
            }
        }
    }
    Ok(EvalReport {
        kind,
        noise_levels: noise_levels.to_vec(),
        antenna_counts: antenna_counts.to_vec(),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full_results() -> Vec<(CellKey, f64)> {
        let mut out = Vec::new();
        for (i, noise) in NoiseLevel::all().into_iter().enumerate() {
            for kalman in [false, true] {
                for (j, antennas) in [8usize, 16, 32, 64].into_iter().enumerate() {
                    let me = 100.0 + 10.0 * i as f64 + j as f64 + if kalman { 0.5 } else { 0.0 };
                    out.push((CellKey { noise, kalman, antennas }, me));
                }
            }
        }
        out
    }

    #[test]
    fn four_by_two_by_four_gives_thirty_two_cells() {
        let report = build_report(
            RouteKind::UniformMotion,
            &NoiseLevel::all(),
            &[8, 16, 32, 64],
            &full_results(),
        )
        .unwrap();
        assert_eq!(report.cells.len(), 32);
        // Row-major ordering: first row block is noise None, filter off.
        assert_eq!(report.cells[0].key.noise, NoiseLevel::None);
        assert!(!report.cells[0].key.kalman);
        assert_eq!(report.cells[0].key.antennas, 8);
        assert_eq!(report.cells[4].key.kalman, true);
        // Lookup agrees with construction.
        assert_eq!(report.cell(NoiseLevel::Medium, true, 16), Some(121.5));
        assert_eq!(report.cell(NoiseLevel::Medium, true, 4), None);
    }

    #[test]
    fn missing_cells_are_named() {
        let mut results = full_results();
        results.retain(|(k, _)| !(k.noise == NoiseLevel::High && k.kalman && k.antennas == 32));
        match build_report(RouteKind::Kidnap, &NoiseLevel::all(), &[8, 16, 32, 64], &results) {
            Err(SimError::IncompleteGrid { noise: "High", kalman: true, antennas: 32 }) => {}
            other => panic!("expected a named missing cell, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_invalid_cells_are_rejected() {
        let mut dup = full_results();
        dup.push(dup[0]);
        assert!(matches!(
            build_report(RouteKind::UniformMotion, &NoiseLevel::all(), &[8, 16, 32, 64], &dup),
            Err(SimError::DuplicateCell { .. })
        ));

        let mut bad = full_results();
        bad[3].1 = f64::NAN;
        assert!(matches!(
            build_report(RouteKind::UniformMotion, &NoiseLevel::all(), &[8, 16, 32, 64], &bad),
            Err(SimError::BadCell { .. })
        ));
    }

    #[test]
    fn serde_round_trip_preserves_the_grid() {
        let report = build_report(
            RouteKind::ObstacleAvoidance,
            &NoiseLevel::all(),
            &[8, 16],
            &full_results()
                .into_iter()
                .filter(|(k, _)| k.antennas <= 16)
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
