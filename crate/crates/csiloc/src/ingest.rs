//! Ingestion of pre-recorded CSI tables.
//!
//! An external table is a CSV of raw channel values plus the two position
//! columns, accompanied by a JSON descriptor declaring its shape: antenna
//! and subcarrier counts, whether values are complex `re, im` pairs or
//! polar `modulus, argument` pairs, and whether pairs are grouped by
//! antenna or by subcarrier. Ingestion converts any such layout to the
//! canonical tidy polar table.

use std::path::Path;

use serde::{Deserialize, Serialize};

use csiloc_core::csi::{wrap_angle, Complex64, CsiMatrix};
use csiloc_core::table::{build_table, FingerprintTable};
use csiloc_core::PointMm;

use crate::error::CliError;

/// How one channel value is encoded as a number pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueEncoding {
    /// `re, im`.
    Complex,
    /// `modulus, argument` (radians).
    Polar,
}

/// Which index varies fastest across the value columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnOrder {
    /// `A1S1, A1S2, ..., A2S1, ...` — subcarriers vary fastest.
    AntennaMajor,
    /// `A1S1, A2S1, ..., A1S2, ...` — antennas vary fastest.
    SubcarrierMajor,
}

/// Declared shape of an external CSI table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestDescriptor {
    pub antennas: usize,
    pub subcarriers: usize,
    pub encoding: ValueEncoding,
    pub column_order: ColumnOrder,
}

/// Read and sanity-check a descriptor file.
pub fn read_descriptor(path: &Path) -> Result<IngestDescriptor, CliError> {
    let descriptor: IngestDescriptor = crate::io::read_json(path)?;
    if descriptor.antennas == 0 || descriptor.subcarriers == 0 {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "antenna and subcarrier counts must be positive".into(),
        });
    }
    Ok(descriptor)
}

/// Convert an external table to the canonical fingerprint table.
///
/// Every row must hold `2 * antennas * subcarriers` values followed by the
/// position. Values must be finite; polar moduli must be non-negative, and
/// polar arguments are re-wrapped into `(-pi, pi]` so tables written with
/// the other sign convention at the boundary still load.
pub fn ingest_external(
    data: &Path,
    descriptor: &IngestDescriptor,
) -> Result<FingerprintTable, CliError> {
    let (antennas, subcarriers) = (descriptor.antennas, descriptor.subcarriers);
    let pairs = antennas * subcarriers;
    let columns = 2 * pairs + 2;

    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(data)
        .map_err(|e| ingest_csv_error(data, e))?;
    let header_len = reader
        .headers()
        .map_err(|e| ingest_csv_error(data, e))?
        .len();
    if header_len != columns {
        return Err(CliError::Parse {
            path: data.to_path_buf(),
            line: 1,
            message: format!(
                "descriptor declares {antennas} antennas x {subcarriers} subcarriers \
                 ({columns} columns); the header has {header_len}"
            ),
        });
    }

    let bad = |line: usize, message: String| CliError::Parse {
        path: data.to_path_buf(),
        line,
        message,
    };
    let mut samples = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let line = index + 2;
        let record = record.map_err(|e| ingest_csv_error(data, e))?;
        if record.len() != columns {
            return Err(bad(line, format!("expected {columns} columns, got {}", record.len())));
        }
        let mut fields = Vec::with_capacity(columns);
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                bad(line, format!("column {}: '{field}' is not a number", col + 1))
            })?;
            if !v.is_finite() {
                return Err(bad(line, format!("column {}: non-finite value", col + 1)));
            }
            fields.push(v);
        }

        let mut values = vec![Complex64::new(0.0, 0.0); pairs];
        for slot in 0..pairs {
            let (a, s) = match descriptor.column_order {
                ColumnOrder::AntennaMajor => (slot / subcarriers, slot % subcarriers),
                ColumnOrder::SubcarrierMajor => (slot % antennas, slot / antennas),
            };
            let first = fields[2 * slot];
            let second = fields[2 * slot + 1];
            let value = match descriptor.encoding {
                ValueEncoding::Complex => Complex64::new(first, second),
                ValueEncoding::Polar => {
                    if first < 0.0 {
                        return Err(bad(
                            line,
                            format!("column {}: negative modulus {first}", 2 * slot + 1),
                        ));
                    }
                    Complex64::from_polar(first, wrap_angle(second))
                }
            };
            values[a * subcarriers + s] = value;
        }
        let pos = PointMm::new(fields[columns - 2], fields[columns - 1]);
        let sample = CsiMatrix::new(antennas, subcarriers, values, Some(pos))
            .map_err(|e| bad(line, e.to_string()))?;
        samples.push(sample);
    }

    build_table(antennas, subcarriers, &samples).map_err(|e| CliError::Parse {
        path: data.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

fn ingest_csv_error(path: &Path, error: csv::Error) -> CliError {
    match error.into_kind() {
        csv::ErrorKind::Io(source) => {
            CliError::Io { action: "read", path: path.to_path_buf(), source }
        }
        other => CliError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}
