//! On-disk artifact formats and the integrity manifest.
//!
//! Numeric CSV columns use Rust's shortest round-trip float formatting, so
//! a file read back yields bit-identical values and reruns with equal seeds
//! produce byte-identical files. The one deliberate exception is the
//! human-oriented report CSV, which rounds to six significant digits (the
//! full-precision copy lives in the adjacent JSON).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use csiloc_core::csi::feature_column_names;
use csiloc_core::image::{FeatureLayout, SyntheticImage};
use csiloc_core::nn::{Axis, HynnArchitecture, HynnParams};
use csiloc_core::sim::{build_report, CellKey, EvalReport, RouteKind, TraceRow};
use csiloc_core::table::FingerprintTable;
use csiloc_core::PointMm;

use crate::config::parse_noise_level;
use crate::error::CliError;

// ── Hashing ──────────────────────────────────────────────────────────────

/// Lower-case hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        write!(out, "{b:02x}").expect("writing to a String cannot fail");
    }
    out
}

/// SHA-256 of a file's contents.
pub fn hash_file(path: &Path) -> Result<String, CliError> {
    Ok(sha256_hex(&read_bytes(path)?))
}

// ── Plain file helpers ───────────────────────────────────────────────────

pub fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|source| CliError::Io {
        action: "read",
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
            action: "create directory",
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, bytes).map_err(|source| CliError::Io {
        action: "write",
        path: path.to_path_buf(),
        source,
    })
}

/// Serialise to pretty JSON, write it, and return the written bytes (for
/// hashing without a second read).
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::core(
        format!("serialise {}", path.display()),
        e,
    ))?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)?;
    Ok(bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

// ── Fingerprint table CSV ────────────────────────────────────────────────

/// Write the tidy polar table: one named column per feature, then the two
/// position columns.
pub fn write_fingerprints(path: &Path, table: &FingerprintTable) -> Result<(), CliError> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record(table.column_names())
        .and_then(|()| {
            for row in 0..table.len() {
                let mut record = Vec::with_capacity(table.feature_dim() + 2);
                for v in table.features(row) {
                    record.push(v.to_string());
                }
                let pos = table.position(row);
                record.push(pos.x.to_string());
                record.push(pos.y.to_string());
                writer.write_record(&record)?;
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| csv_io_error("write", path, e))
}

/// Read a tidy polar table, recovering the antenna/subcarrier shape from
/// the header and validating it column by column.
pub fn read_fingerprints(path: &Path) -> Result<FingerprintTable, CliError> {
    let mut reader = csv_reader(path)?;
    let header = reader
        .headers()
        .map_err(|e| csv_io_error("read", path, e))?
        .clone();
    let (antennas, subcarriers) = infer_shape(path, &header)?;
    let expected: Vec<String> = feature_column_names(antennas, subcarriers);
    let got: Vec<String> = header.iter().map(str::to_string).collect();
    if got != expected {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!(
                "header does not match the {antennas} x {subcarriers} column layout"
            ),
        });
    }

    let dim = 2 * antennas * subcarriers;
    let mut rows = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let line = index + 2; // one-based, after the header
        let record = record.map_err(|e| csv_io_error("read", path, e))?;
        if record.len() != dim + 2 {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} columns, got {}", dim + 2, record.len()),
            });
        }
        let mut values = Vec::with_capacity(dim + 2);
        for (col, field) in record.iter().enumerate() {
            values.push(parse_float(path, line, &header[col], field)?);
        }
        let pos = PointMm::new(values[dim], values[dim + 1]);
        values.truncate(dim);
        rows.push((values, pos));
    }
    FingerprintTable::new(antennas, subcarriers, rows).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })
}

/// Recover `(antennas, subcarriers)` from the last feature column name,
/// e.g. `A64S4-φ`.
fn infer_shape(path: &Path, header: &csv::StringRecord) -> Result<(usize, usize), CliError> {
    let bad = |message: String| CliError::Parse { path: path.to_path_buf(), line: 1, message };
    if header.len() < 4 {
        return Err(bad("too few columns for one antenna-subcarrier pair".into()));
    }
    let name = &header[header.len() - 3];
    let core = name
        .strip_prefix('A')
        .and_then(|s| s.strip_suffix("-φ"))
        .ok_or_else(|| bad(format!("cannot infer the table shape from column '{name}'")))?;
    let (a, s) = core
        .split_once('S')
        .ok_or_else(|| bad(format!("cannot infer the table shape from column '{name}'")))?;
    let antennas = a.parse::<usize>();
    let subcarriers = s.parse::<usize>();
    match (antennas, subcarriers) {
        (Ok(a), Ok(s)) if a > 0 && s > 0 => Ok((a, s)),
        _ => Err(bad(format!("cannot infer the table shape from column '{name}'"))),
    }
}

// ── Feature layouts ──────────────────────────────────────────────────────

/// Serialisable form of one fitted feature layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutRecord {
    pub image_side: usize,
    /// Pixel per feature, `(row, col)`.
    pub pixels: Vec<(u32, u32)>,
    /// Normalisation `(min, max)` per feature, from the training split.
    pub fit_stats: Vec<(f64, f64)>,
}

impl LayoutRecord {
    pub fn from_layout(layout: &FeatureLayout) -> Self {
        Self {
            image_side: layout.image_side(),
            pixels: layout.pixels().to_vec(),
            fit_stats: layout.fit_stats().to_vec(),
        }
    }

    pub fn to_layout(&self) -> Result<FeatureLayout, CliError> {
        FeatureLayout::from_parts(self.image_side, self.pixels.clone(), self.fit_stats.clone())
            .map_err(|e| CliError::integrity(format!("stored feature layout is unusable: {e}")))
    }
}

/// All fitted layouts of a training run, keyed by antenna count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayoutsFile {
    pub version: u32,
    pub per_count: BTreeMap<usize, LayoutRecord>,
}

/// Current layouts-file schema version.
pub const LAYOUTS_VERSION: u32 = 1;

/// Write the layouts file and return the SHA-256 the checkpoints must
/// reference.
pub fn write_layouts(path: &Path, layouts: &LayoutsFile) -> Result<String, CliError> {
    let bytes = write_json(path, layouts)?;
    Ok(sha256_hex(&bytes))
}

/// Read the layouts file together with the hash of its bytes.
pub fn read_layouts(path: &Path) -> Result<(LayoutsFile, String), CliError> {
    let bytes = read_bytes(path)?;
    let layouts: LayoutsFile = serde_json::from_slice(&bytes).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    if layouts.version != LAYOUTS_VERSION {
        return Err(CliError::integrity(format!(
            "{}: layouts version {} (this build reads {})",
            path.display(),
            layouts.version,
            LAYOUTS_VERSION
        )));
    }
    Ok((layouts, sha256_hex(&bytes)))
}

// ── Model checkpoints ────────────────────────────────────────────────────

/// Current checkpoint schema version.
pub const CHECKPOINT_VERSION: u32 = 1;

/// Versioned container for one trained regressor: architecture, flat
/// parameter and running-statistic buffers, and the hash of the layouts
/// file the model was trained against. Loading fails when any of those
/// disagree, so a model can never run on features placed by a different
/// layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    /// `"x"` or `"y"`.
    pub axis: String,
    pub antennas: usize,
    pub arch: HynnArchitecture,
    pub layout_sha256: String,
    pub values: Vec<f64>,
    pub running: Vec<f64>,
}

impl Checkpoint {
    pub fn new(axis: Axis, antennas: usize, layout_sha256: String, params: &HynnParams) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            axis: axis.name().to_string(),
            antennas,
            arch: *params.arch(),
            layout_sha256,
            values: params.values().to_vec(),
            running: params.running().to_vec(),
        }
    }

    /// Rebuild the network, verifying the version, the layout reference,
    /// and the buffer shapes.
    pub fn into_params(self, expected_layout_sha256: &str) -> Result<HynnParams, CliError> {
        if self.version != CHECKPOINT_VERSION {
            return Err(CliError::integrity(format!(
                "checkpoint version {} (this build reads {})",
                self.version, CHECKPOINT_VERSION
            )));
        }
        if self.layout_sha256 != expected_layout_sha256 {
            return Err(CliError::integrity(format!(
                "checkpoint for axis {} at {} antennas references layouts {} but the layouts file hashes to {}",
                self.axis, self.antennas, self.layout_sha256, expected_layout_sha256
            )));
        }
        HynnParams::from_parts(self.arch, self.values, self.running)
            .map_err(|e| CliError::integrity(format!("checkpoint buffers are unusable: {e}")))
    }
}

pub fn write_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<(), CliError> {
    write_json(path, checkpoint).map(drop)
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    read_json(path)
}

// ── Trace CSV ────────────────────────────────────────────────────────────

const TRACE_HEADER: [&str; 7] =
    ["t_s", "truth_x_mm", "truth_y_mm", "pred_x_mm", "pred_y_mm", "kf_x_mm", "kf_y_mm"];

/// Write one run's per-instant trace.
pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<(), CliError> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record(TRACE_HEADER)
        .and_then(|()| {
            for row in rows {
                writer.write_record([
                    row.t_s.to_string(),
                    row.truth.x.to_string(),
                    row.truth.y.to_string(),
                    row.raw.x.to_string(),
                    row.raw.y.to_string(),
                    row.filtered.x.to_string(),
                    row.filtered.y.to_string(),
                ])?;
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| csv_io_error("write", path, e))
}

/// Read a trace written by [`write_trace`].
pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>, CliError> {
    let mut reader = csv_reader(path)?;
    let header = reader
        .headers()
        .map_err(|e| csv_io_error("read", path, e))?
        .clone();
    let got: Vec<&str> = header.iter().collect();
    if got != TRACE_HEADER {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected trace columns {}", TRACE_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let line = index + 2;
        let record = record.map_err(|e| csv_io_error("read", path, e))?;
        if record.len() != TRACE_HEADER.len() {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} columns, got {}", TRACE_HEADER.len(), record.len()),
            });
        }
        let mut v = [0.0; 7];
        for (i, field) in record.iter().enumerate() {
            v[i] = parse_float(path, line, TRACE_HEADER[i], field)?;
        }
        rows.push(TraceRow {
            t_s: v[0],
            truth: PointMm::new(v[1], v[2]),
            raw: PointMm::new(v[3], v[4]),
            filtered: PointMm::new(v[5], v[6]),
        });
    }
    Ok(rows)
}

// ── Evaluation reports ───────────────────────────────────────────────────

/// Write the full-precision report.
pub fn write_report_json(path: &Path, report: &EvalReport) -> Result<(), CliError> {
    write_json(path, report).map(drop)
}

pub fn read_report_json(path: &Path) -> Result<EvalReport, CliError> {
    read_json(path)
}

/// Write the human-oriented grid: noise level and filter as row labels,
/// antenna counts as columns, cells rounded to six significant digits.
pub fn write_report_csv(path: &Path, report: &EvalReport) -> Result<(), CliError> {
    let mut writer = csv_writer(path)?;
    let mut header = vec!["noise".to_string(), "kalman".to_string()];
    header.extend(report.antenna_counts.iter().map(usize::to_string));
    writer
        .write_record(&header)
        .and_then(|()| {
            for &noise in &report.noise_levels {
                for (kalman, &label) in [false, true].iter().zip(&EvalReport::kalman_labels()) {
                    let mut record = vec![noise.label().to_string(), label.to_string()];
                    for &antennas in &report.antenna_counts {
                        let value = report
                            .cell(noise, *kalman, antennas)
                            .expect("reports are complete grids");
                        record.push(format_sig6(value));
                    }
                    writer.write_record(&record)?;
                }
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| csv_io_error("write", path, e))
}

/// Write every experiment's grid as one table with an `experiment` column.
pub fn write_merged_report_csv(path: &Path, reports: &[EvalReport]) -> Result<(), CliError> {
    let counts = reports.first().map(|r| r.antenna_counts.as_slice()).unwrap_or(&[]);
    let mut writer = csv_writer(path)?;
    let mut header = vec!["experiment".to_string(), "noise".to_string(), "kalman".to_string()];
    header.extend(counts.iter().map(usize::to_string));
    writer
        .write_record(&header)
        .and_then(|()| {
            for report in reports {
                for &noise in &report.noise_levels {
                    for (kalman, &label) in
                        [false, true].iter().zip(&EvalReport::kalman_labels())
                    {
                        let mut record = vec![
                            report.kind.label().to_string(),
                            noise.label().to_string(),
                            label.to_string(),
                        ];
                        for &antennas in &report.antenna_counts {
                            let value = report
                                .cell(noise, *kalman, antennas)
                                .expect("reports are complete grids");
                            record.push(format_sig6(value));
                        }
                        writer.write_record(&record)?;
                    }
                }
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| csv_io_error("write", path, e))
}

/// Read a grid written by [`write_report_csv`]. The route kind is not part
/// of the CSV; the caller knows it from the file's location.
pub fn read_report_csv(path: &Path, kind: RouteKind) -> Result<EvalReport, CliError> {
    let mut reader = csv_reader(path)?;
    let header = reader
        .headers()
        .map_err(|e| csv_io_error("read", path, e))?
        .clone();
    let bad = |line: usize, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    if header.len() < 3 || &header[0] != "noise" || &header[1] != "kalman" {
        return Err(bad(1, "expected columns noise,kalman,<antenna counts>".into()));
    }
    let antenna_counts: Vec<usize> = header
        .iter()
        .skip(2)
        .map(|name| {
            name.parse::<usize>()
                .map_err(|_| bad(1, format!("column '{name}' is not an antenna count")))
        })
        .collect::<Result<_, _>>()?;

    let mut noise_levels = Vec::new();
    let mut cells = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let line = index + 2;
        let record = record.map_err(|e| csv_io_error("read", path, e))?;
        if record.len() != antenna_counts.len() + 2 {
            return Err(bad(
                line,
                format!("expected {} columns, got {}", antenna_counts.len() + 2, record.len()),
            ));
        }
        let noise = parse_noise_level(&record[0])
            .ok_or_else(|| bad(line, format!("unknown noise level '{}'", &record[0])))?;
        let kalman = match &record[1] {
            "No" => false,
            "Yes" => true,
            other => return Err(bad(line, format!("unknown filter flag '{other}'"))),
        };
        if !noise_levels.contains(&noise) {
            noise_levels.push(noise);
        }
        for (i, &antennas) in antenna_counts.iter().enumerate() {
            let value = parse_float(path, line, &header[i + 2], &record[i + 2])?;
            cells.push((CellKey { noise, kalman, antennas }, value));
        }
    }
    build_report(kind, &noise_levels, &antenna_counts, &cells).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("grid is not complete and consistent: {e}"),
    })
}

/// Format with six significant digits, never in scientific notation; the
/// result parses back to the same six-digit value (writing what was read
/// reproduces the bytes). Magnitudes of 10^6 and up keep their full
/// integer part.
pub fn format_sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let mut exponent = exponent10(v);
    // Rounding to six digits can carry into the next decade
    // (999.9996 -> 1000.00); recheck on the rounded value.
    let scale = 10f64.powi(5 - exponent);
    let rounded = (v * scale).round() / scale;
    if rounded != 0.0 {
        exponent = exponent10(rounded);
    }
    let decimals = (5 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

fn exponent10(v: f64) -> i32 {
    v.abs().log10().floor() as i32
}

// ── Training metrics ─────────────────────────────────────────────────────

/// Write the test-split mean error per antenna count.
pub fn write_metrics(path: &Path, cells: &[(usize, f64)]) -> Result<(), CliError> {
    let mut writer = csv_writer(path)?;
    writer
        .write_record(["antennas", "test_me_mm"])
        .and_then(|()| {
            for &(antennas, me) in cells {
                writer.write_record([antennas.to_string(), me.to_string()])?;
            }
            writer.flush().map_err(csv::Error::from)
        })
        .map_err(|e| csv_io_error("write", path, e))
}

/// Read a metrics file written by [`write_metrics`].
pub fn read_metrics(path: &Path) -> Result<Vec<(usize, f64)>, CliError> {
    let mut reader = csv_reader(path)?;
    let mut out = Vec::new();
    for (index, record) in reader.records().enumerate() {
        let line = index + 2;
        let record = record.map_err(|e| csv_io_error("read", path, e))?;
        if record.len() != 2 {
            return Err(CliError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected 2 columns, got {}", record.len()),
            });
        }
        let antennas = record[0].parse::<usize>().map_err(|_| CliError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("'{}' is not an antenna count", &record[0]),
        })?;
        out.push((antennas, parse_float(path, line, "test_me_mm", &record[1])?));
    }
    Ok(out)
}

// ── Image dumps ──────────────────────────────────────────────────────────

/// Write a rendered image as an 8-bit grayscale PNG (`round(255 * pixel)`).
pub fn write_png(path: &Path, image: &SyntheticImage) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
            action: "create directory",
            path: parent.to_path_buf(),
            source,
        })?;
    }
    let side = image.side() as u32;
    let bytes: Vec<u8> = image.pixels().iter().map(|&p| (255.0 * p).round() as u8).collect();
    let buffer = image::GrayImage::from_raw(side, side, bytes)
        .expect("pixel buffer matches the declared side");
    buffer
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| CliError::core(format!("write image {}", path.display()), e))
}

// ── Manifest ─────────────────────────────────────────────────────────────

/// Manifest file name inside the output directory.
pub const MANIFEST_FILE: &str = "manifest.json";
/// Current manifest schema version.
pub const MANIFEST_VERSION: u32 = 1;

/// Hash chain tying every artifact in the output directory to the config
/// that produced it. Later stages refuse to run when an upstream artifact
/// no longer matches its recorded hash.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    /// SHA-256 of the canonical serialisation of the effective config.
    pub config_sha256: String,
    /// Relative artifact path -> SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(config_sha256: String) -> Self {
        Self { version: MANIFEST_VERSION, config_sha256, artifacts: BTreeMap::new() }
    }

    pub fn path_in(out_dir: &Path) -> PathBuf {
        out_dir.join(MANIFEST_FILE)
    }

    pub fn load(out_dir: &Path) -> Result<Self, CliError> {
        let manifest: Manifest = read_json(&Self::path_in(out_dir))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(CliError::integrity(format!(
                "manifest version {} (this build reads {})",
                manifest.version, MANIFEST_VERSION
            )));
        }
        Ok(manifest)
    }

    pub fn save(&self, out_dir: &Path) -> Result<(), CliError> {
        write_json(&Self::path_in(out_dir), self).map(drop)
    }

    /// Require that the manifest belongs to this config.
    pub fn check_config(&self, config_sha256: &str) -> Result<(), CliError> {
        if self.config_sha256 != config_sha256 {
            return Err(CliError::integrity(
                "the output directory was produced by a different config; rerun gen-data",
            ));
        }
        Ok(())
    }

    /// Hash an artifact that was just written and record it.
    pub fn record(&mut self, out_dir: &Path, rel: &str) -> Result<(), CliError> {
        let hash = hash_file(&out_dir.join(rel))?;
        self.artifacts.insert(rel.to_string(), hash);
        Ok(())
    }

    /// Verify a recorded artifact against its current bytes.
    pub fn verify(&self, out_dir: &Path, rel: &str) -> Result<(), CliError> {
        let recorded = self.artifacts.get(rel).ok_or_else(|| {
            CliError::integrity(format!("{rel} is not recorded in the manifest"))
        })?;
        let actual = hash_file(&out_dir.join(rel))?;
        if &actual != recorded {
            return Err(CliError::integrity(format!(
                "{rel} hashes to {actual} but the manifest records {recorded}"
            )));
        }
        Ok(())
    }
}

// ── CSV plumbing ─────────────────────────────────────────────────────────

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| CliError::Io {
            action: "create directory",
            path: parent.to_path_buf(),
            source,
        })?;
    }
    csv::Writer::from_path(path).map_err(|e| csv_io_error("write", path, e))
}

fn csv_reader(path: &Path) -> Result<csv::Reader<std::fs::File>, CliError> {
    // Flexible so short rows surface as our own errors with line numbers
    // instead of the reader's position-less length complaint.
    csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_io_error("read", path, e))
}

fn csv_io_error(action: &'static str, path: &Path, error: csv::Error) -> CliError {
    match error.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io { action, path: path.to_path_buf(), source },
        other => CliError::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

fn parse_float(path: &Path, line: usize, column: &str, field: &str) -> Result<f64, CliError> {
    field.trim().parse::<f64>().map_err(|_| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("column {column}: '{field}' is not a number"),
    })
}
