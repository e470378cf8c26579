//! The five pipeline stages behind the CLI subcommands.
//!
//! Each stage reads its inputs from the output directory, verifies them
//! against the manifest hash chain, writes its artifacts, and extends the
//! manifest. Stages are deterministic: rerunning one with the same config
//! and seeds reproduces every artifact byte for byte (the latency report is
//! the deliberate exception and stays outside the manifest).

use std::collections::BTreeMap;
use std::path::PathBuf;

use csiloc_core::csi::synth_samples;
use csiloc_core::geom::mean_error;
use csiloc_core::image::{fit_layout, render, BlurSpec, FeatureLayout, SyntheticImage};
use csiloc_core::kalman::KalmanConfig;
use csiloc_core::nn::{predict_position, prepare_samples, train, Axis, HynnParams};
use csiloc_core::rng::mix_seed;
use csiloc_core::sim::{
    build_report, calibrate_measurement_noise, run_experiment, CellKey, EvalReport,
    ExperimentSetup, HynnPredictor, NoiseLevel, NoiseSpec, RouteKind,
};
use csiloc_core::table::{
    build_table, grid_positions, split as split_table, subset_antennas, FingerprintTable,
};

use crate::bench::{bench_pair, BenchEntry, BenchReport};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::ingest;
use crate::io::{
    read_checkpoint, read_fingerprints, read_layouts, read_report_json, write_checkpoint,
    write_fingerprints, write_json, write_layouts, write_merged_report_csv, write_metrics,
    write_png, write_report_csv, write_report_json, write_trace, Checkpoint, LayoutRecord,
    LayoutsFile, Manifest, LAYOUTS_VERSION,
};

// ── Artifact names ───────────────────────────────────────────────────────

pub const FINGERPRINTS_FILE: &str = "fingerprints.csv";
pub const LAYOUTS_FILE: &str = "layouts.json";
pub const METRICS_FILE: &str = "metrics.csv";
/// Timing file: rewritten every run, never part of the manifest.
pub const BENCH_FILE: &str = "bench.json";
pub const MERGED_REPORT_JSON: &str = "report_all.json";
pub const MERGED_REPORT_CSV: &str = "report_all.csv";

/// Checkpoint file for one axis and antenna count.
pub fn checkpoint_rel(axis: Axis, antennas: usize) -> String {
    format!("model_{}_a{antennas}.json", axis.name())
}

/// Directory of one experiment's traces and report.
pub fn experiment_rel(kind: RouteKind) -> String {
    format!("exp{}-{}", kind.experiment_number(), kind.label())
}

/// Trace file for one report cell.
pub fn trace_rel(kind: RouteKind, noise: NoiseLevel, kalman: bool, antennas: usize) -> String {
    format!(
        "{}/trace_{}_kf-{}_a{antennas}.csv",
        experiment_rel(kind),
        noise.label().to_ascii_lowercase(),
        if kalman { "yes" } else { "no" },
    )
}

/// Per-experiment report file (`json` or `csv`).
pub fn report_rel(kind: RouteKind, extension: &str) -> String {
    format!("{}/report.{extension}", experiment_rel(kind))
}

/// Dumped rendering of one training row.
pub fn image_rel(antennas: usize, index: usize) -> String {
    format!("images/a{antennas}/train_{index:03}.png")
}

// ── Stage context ────────────────────────────────────────────────────────

/// Effective configuration of one command invocation.
pub struct Stage {
    pub config: PipelineConfig,
    pub out_dir: PathBuf,
    /// Hash of the content-affecting config fields; artifacts are only
    /// valid under the config they were produced with.
    pub config_sha256: String,
}

impl Stage {
    pub fn new(mut config: PipelineConfig, out_dir_override: Option<PathBuf>) -> Self {
        if let Some(dir) = out_dir_override {
            config.out_dir = dir;
        }
        let config_sha256 = config.content_fingerprint();
        let out_dir = config.out_dir.clone();
        Self { config, out_dir, config_sha256 }
    }

    fn blur(&self) -> Result<BlurSpec, CliError> {
        BlurSpec::new(self.config.image.blur_sigma)
            .map_err(|e| CliError::invalid("image.blur_sigma", e.to_string()))
    }

    /// Load the manifest and insist it belongs to this config.
    fn manifest(&self) -> Result<Manifest, CliError> {
        let path = Manifest::path_in(&self.out_dir);
        if !path.exists() {
            return Err(CliError::Io {
                action: "read",
                path,
                source: std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    "no manifest here; run gen-data first",
                ),
            });
        }
        let manifest = Manifest::load(&self.out_dir)?;
        manifest.check_config(&self.config_sha256)?;
        Ok(manifest)
    }
}

// ── gen-data ─────────────────────────────────────────────────────────────

/// What `gen-data` produced.
pub struct GenDataSummary {
    pub rows: usize,
    pub antennas: usize,
    pub subcarriers: usize,
    pub ingested: bool,
}

/// Synthesise (or ingest) the fingerprint table and start a fresh manifest.
pub fn run_gen_data(stage: &Stage) -> Result<GenDataSummary, CliError> {
    let (table, ingested) = match &stage.config.ingest {
        Some(source) => {
            let descriptor = ingest::read_descriptor(&source.descriptor)?;
            (ingest::ingest_external(&source.data, &descriptor)?, true)
        }
        None => (synth_grid_table(&stage.config)?, false),
    };

    write_fingerprints(&stage.out_dir.join(FINGERPRINTS_FILE), &table)?;
    let mut manifest = Manifest::new(stage.config_sha256.clone());
    manifest.record(&stage.out_dir, FINGERPRINTS_FILE)?;
    manifest.save(&stage.out_dir)?;
    Ok(GenDataSummary {
        rows: table.len(),
        antennas: table.antennas(),
        subcarriers: table.subcarriers(),
        ingested,
    })
}

/// The synthetic fingerprint lattice for the configured scenario.
fn synth_grid_table(config: &PipelineConfig) -> Result<FingerprintTable, CliError> {
    let array = config.antenna_array()?;
    let scatter = config.scatter_model()?;
    let s = &config.scenario;
    let positions = grid_positions(
        (s.bounds_min_mm[0], s.bounds_max_mm[0]),
        (s.bounds_min_mm[1], s.bounds_max_mm[1]),
        s.grid_step_mm,
    )
    .map_err(|e| CliError::core("lay out the fingerprint lattice", e))?;
    let samples = synth_samples(&positions, &array, &scatter, config.seeds.data)
        .map_err(|e| CliError::core("synthesise fingerprints", e))?;
    build_table(array.antennas(), array.subcarriers(), &samples)
        .map_err(|e| CliError::core("assemble the fingerprint table", e))
}

// ── train ────────────────────────────────────────────────────────────────

/// Outcome for one antenna count.
pub struct TrainOutcome {
    pub antennas: usize,
    pub test_me_mm: f64,
    pub epochs_x: usize,
    pub epochs_y: usize,
}

/// Everything `train` persists for one antenna count.
struct CountArtifacts {
    antennas: usize,
    model_x: HynnParams,
    model_y: HynnParams,
    dumped: Vec<SyntheticImage>,
}

/// Train the per-axis model pair for every configured antenna count:
/// subset -> split -> fit layout on the training split -> render -> train
/// both axes -> evaluate the test-split mean error.
pub fn run_train(stage: &Stage, dump_images: usize) -> Result<Vec<TrainOutcome>, CliError> {
    let mut manifest = stage.manifest()?;
    manifest.verify(&stage.out_dir, FINGERPRINTS_FILE)?;
    let table = read_fingerprints(&stage.out_dir.join(FINGERPRINTS_FILE))?;
    check_table_shape(&stage.config, &table)?;
    let blur = stage.blur()?;

    let mut layouts = LayoutsFile { version: LAYOUTS_VERSION, per_count: BTreeMap::new() };
    let mut artifacts: Vec<CountArtifacts> = Vec::new();
    let mut outcomes: Vec<TrainOutcome> = Vec::new();

    for &count in &stage.config.experiments.antenna_counts {
        let context = |what: &str| format!("{what} at {count} antennas");
        let subset = subset_antennas(&table, count)
            .map_err(|e| CliError::core(context("subset the table"), e))?;
        let parts = split_table(&subset, stage.config.seeds.split)
            .map_err(|e| CliError::core(context("split the table"), e))?;
        let layout = fit_layout(&parts.train, stage.config.image.side)
            .map_err(|e| CliError::core(context("fit the feature layout"), e))?;

        let arch = stage.config.architecture(subset.feature_dim());
        let mut models: Vec<HynnParams> = Vec::with_capacity(2);
        let mut epochs = [0usize; 2];
        let mut dumped = Vec::new();
        for (tag, axis) in [Axis::X, Axis::Y].into_iter().enumerate() {
            let train_set = prepare_samples(&parts.train, &layout, &blur, axis)
                .map_err(|e| CliError::core(context("render the training split"), e))?;
            let val_set = prepare_samples(&parts.validation, &layout, &blur, axis)
                .map_err(|e| CliError::core(context("render the validation split"), e))?;
            if tag == 0 {
                dumped =
                    train_set.iter().take(dump_images).map(|s| s.image.clone()).collect();
            }
            let seed = mix_seed(stage.config.seeds.train, &[count as u64, tag as u64]);
            let (params, log) =
                train(arch, &train_set, &val_set, &stage.config.train_config(seed)).map_err(
                    |e| {
                        CliError::core(
                            format!("train the {} model at {count} antennas", axis.name()),
                            e,
                        )
                    },
                )?;
            epochs[tag] = log.records.len();
            models.push(params);
        }
        let model_y = models.pop().expect("both axes trained");
        let model_x = models.pop().expect("both axes trained");

        let test_me_mm = table_mean_error(&parts.test, &layout, &blur, &model_x, &model_y)
            .map_err(|e| CliError::Core { context: context("evaluate the test split"), source: e })?;

        layouts.per_count.insert(count, LayoutRecord::from_layout(&layout));
        outcomes.push(TrainOutcome {
            antennas: count,
            test_me_mm,
            epochs_x: epochs[0],
            epochs_y: epochs[1],
        });
        artifacts.push(CountArtifacts { antennas: count, model_x, model_y, dumped });
    }

    // Persist. The layouts file goes first: its hash is embedded in every
    // checkpoint so models can never be replayed against other layouts.
    let layouts_sha = write_layouts(&stage.out_dir.join(LAYOUTS_FILE), &layouts)?;

    // Rebuild this stage's manifest entries from scratch so artifacts of
    // earlier runs (e.g. a larger image dump) cannot linger.
    manifest.artifacts.retain(|rel, _| !is_train_artifact(rel));
    manifest.record(&stage.out_dir, LAYOUTS_FILE)?;

    for bundle in &artifacts {
        for (axis, params) in
            [(Axis::X, &bundle.model_x), (Axis::Y, &bundle.model_y)]
        {
            let rel = checkpoint_rel(axis, bundle.antennas);
            let checkpoint = Checkpoint::new(axis, bundle.antennas, layouts_sha.clone(), params);
            write_checkpoint(&stage.out_dir.join(&rel), &checkpoint)?;
            manifest.record(&stage.out_dir, &rel)?;
        }
        for (index, image) in bundle.dumped.iter().enumerate() {
            let rel = image_rel(bundle.antennas, index);
            write_png(&stage.out_dir.join(&rel), image)?;
            manifest.record(&stage.out_dir, &rel)?;
        }
    }

    let metric_cells: Vec<(usize, f64)> =
        outcomes.iter().map(|o| (o.antennas, o.test_me_mm)).collect();
    write_metrics(&stage.out_dir.join(METRICS_FILE), &metric_cells)?;
    manifest.record(&stage.out_dir, METRICS_FILE)?;
    manifest.save(&stage.out_dir)?;
    Ok(outcomes)
}

fn is_train_artifact(rel: &str) -> bool {
    rel == LAYOUTS_FILE
        || rel == METRICS_FILE
        || rel.starts_with("model_")
        || rel.starts_with("images/")
}

fn check_table_shape(config: &PipelineConfig, table: &FingerprintTable) -> Result<(), CliError> {
    let a = &config.scenario.array;
    if table.antennas() != a.antennas || table.subcarriers() != a.subcarriers {
        return Err(CliError::invalid(
            "scenario.array",
            format!(
                "config declares {} antennas x {} subcarriers but the fingerprint table holds {} x {}",
                a.antennas,
                a.subcarriers,
                table.antennas(),
                table.subcarriers()
            ),
        ));
    }
    Ok(())
}

/// Mean Euclidean error of the model pair over a labelled table.
fn table_mean_error(
    table: &FingerprintTable,
    layout: &FeatureLayout,
    blur: &BlurSpec,
    model_x: &HynnParams,
    model_y: &HynnParams,
) -> Result<f64, Box<dyn std::error::Error + Send + Sync>> {
    let mut truth = Vec::with_capacity(table.len());
    let mut estimates = Vec::with_capacity(table.len());
    for row in 0..table.len() {
        let raw = table.features(row);
        let image = render(raw, layout, blur)?;
        let features = layout.normalise_row(raw)?;
        estimates.push(predict_position(model_x, model_y, &image, &features)?);
        truth.push(table.position(row));
    }
    Ok(mean_error(&truth, &estimates))
}

// ── Loading trained artifacts ────────────────────────────────────────────

/// One antenna count's runnable bundle.
struct LoadedCount {
    subset: FingerprintTable,
    layout: FeatureLayout,
    model_x: HynnParams,
    model_y: HynnParams,
}

/// Load the subset table, layout, and checkpoint pair for each count,
/// enforcing the layout hash reference and shape agreement.
fn load_counts(
    stage: &Stage,
    table: &FingerprintTable,
) -> Result<BTreeMap<usize, LoadedCount>, CliError> {
    let (layouts, layouts_sha) = read_layouts(&stage.out_dir.join(LAYOUTS_FILE))?;
    let mut out = BTreeMap::new();
    for &count in &stage.config.experiments.antenna_counts {
        let subset = subset_antennas(table, count)
            .map_err(|e| CliError::core(format!("subset the table to {count} antennas"), e))?;
        let record = layouts.per_count.get(&count).ok_or_else(|| {
            CliError::integrity(format!(
                "the layouts file has no entry for {count} antennas; retrain"
            ))
        })?;
        let layout = record.to_layout()?;

        let mut pair: Vec<HynnParams> = Vec::with_capacity(2);
        for axis in [Axis::X, Axis::Y] {
            let rel = checkpoint_rel(axis, count);
            let checkpoint = read_checkpoint(&stage.out_dir.join(&rel))?;
            if checkpoint.axis != axis.name() || checkpoint.antennas != count {
                return Err(CliError::integrity(format!(
                    "{rel} holds a model for axis {} at {} antennas",
                    checkpoint.axis, checkpoint.antennas
                )));
            }
            let params = checkpoint.into_params(&layouts_sha)?;
            if params.arch().feature_dim != subset.feature_dim() {
                return Err(CliError::integrity(format!(
                    "{rel} expects {} features but the table provides {}",
                    params.arch().feature_dim,
                    subset.feature_dim()
                )));
            }
            if params.arch().image_side != layout.image_side() {
                return Err(CliError::integrity(format!(
                    "{rel} expects {} px images but the layout renders {} px",
                    params.arch().image_side,
                    layout.image_side()
                )));
            }
            pair.push(params);
        }
        let model_y = pair.pop().expect("both axes loaded");
        let model_x = pair.pop().expect("both axes loaded");
        out.insert(count, LoadedCount { subset, layout, model_x, model_y });
    }
    Ok(out)
}

// ── bench ────────────────────────────────────────────────────────────────

/// Measure single-sample inference latency for every antenna count and
/// write the advisory timing report.
pub fn run_bench(stage: &Stage, iterations: Option<usize>) -> Result<BenchReport, CliError> {
    let iterations = iterations.unwrap_or(stage.config.bench.iterations);
    if iterations < 100 {
        return Err(CliError::invalid("bench.iterations", "must be at least 100"));
    }
    let table_path = stage.out_dir.join(FINGERPRINTS_FILE);
    if !table_path.exists() {
        return Err(CliError::Io {
            action: "read",
            path: table_path,
            source: std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "no fingerprint table here; run gen-data first",
            ),
        });
    }
    let table = read_fingerprints(&table_path)?;
    check_table_shape(&stage.config, &table)?;
    if table.is_empty() {
        return Err(CliError::invalid("bench", "the fingerprint table is empty"));
    }
    let blur = stage.blur()?;
    let loaded = load_counts(stage, &table)?;

    let mut entries: Vec<BenchEntry> = Vec::with_capacity(loaded.len());
    for &count in &stage.config.experiments.antenna_counts {
        let bundle = &loaded[&count];
        let raw = bundle.subset.features(0);
        let image = render(raw, &bundle.layout, &blur)
            .map_err(|e| CliError::core(format!("render the probe at {count} antennas"), e))?;
        let features = bundle
            .layout
            .normalise_row(raw)
            .map_err(|e| CliError::core(format!("normalise the probe at {count} antennas"), e))?;
        entries.push(bench_pair(
            count,
            &bundle.model_x,
            &bundle.model_y,
            &image,
            &features,
            iterations,
        )?);
    }
    let report = BenchReport { iterations, entries };
    write_json(&stage.out_dir.join(BENCH_FILE), &report)?;
    Ok(report)
}

// ── simulate ─────────────────────────────────────────────────────────────

/// What `simulate` produced.
pub struct SimulateSummary {
    pub reports: Vec<EvalReport>,
    pub traces: usize,
}

/// Drive every configured (route, noise, antennas) cell, writing one trace
/// per report cell and one report per experiment.
pub fn run_simulate(stage: &Stage) -> Result<SimulateSummary, CliError> {
    let mut manifest = stage.manifest()?;
    // Refuse to run when any upstream artifact disagrees with the chain.
    let upstream: Vec<String> = manifest
        .artifacts
        .keys()
        .filter(|rel| !is_simulation_artifact(rel))
        .cloned()
        .collect();
    for rel in upstream {
        manifest.verify(&stage.out_dir, &rel)?;
    }

    let table = read_fingerprints(&stage.out_dir.join(FINGERPRINTS_FILE))?;
    check_table_shape(&stage.config, &table)?;
    let blur = stage.blur()?;
    let loaded = load_counts(stage, &table)?;

    let kinds = stage.config.route_kinds()?;
    let levels = stage.config.noise_levels()?;
    let counts = stage.config.experiments.antenna_counts.clone();
    let fps_table = stage.config.fps_table()?;
    let bounds = stage.config.bounds();

    manifest.artifacts.retain(|rel, _| !is_simulation_artifact(rel));

    let mut reports = Vec::with_capacity(kinds.len());
    let mut traces = 0usize;
    for &kind in &kinds {
        let route_seed =
            mix_seed(stage.config.seeds.route, &[kind.experiment_number() as u64]);
        let mut cells: Vec<(CellKey, f64)> = Vec::with_capacity(levels.len() * 2 * counts.len());
        for &count in &counts {
            let bundle = &loaded[&count];
            for (noise_index, &level) in levels.iter().enumerate() {
                let cell_context = format!(
                    "experiment {} ({}): cell noise={} antennas={count}",
                    kind.experiment_number(),
                    kind.label(),
                    level.label()
                );
                let noise_seed = mix_seed(
                    stage.config.seeds.noise,
                    &[kind.experiment_number() as u64, noise_index as u64, count as u64],
                );
                let kalman = kalman_for_cell(stage, bundle, &blur, level, noise_seed)
                    .map_err(|e| CliError::Core {
                        context: format!("{cell_context}: calibrate the filter"),
                        source: e,
                    })?;
                let mut predictor =
                    HynnPredictor { model_x: &bundle.model_x, model_y: &bundle.model_y };
                let setup = ExperimentSetup {
                    kind,
                    bounds,
                    table: &bundle.subset,
                    layout: &bundle.layout,
                    blur: &blur,
                    fps_table: &fps_table,
                    antennas: count,
                    neighbours: stage.config.experiments.neighbours,
                    noise: NoiseSpec { level, seed: noise_seed },
                    kalman,
                    route_seed,
                };
                let run = run_experiment(&setup, &mut predictor)
                    .map_err(|e| CliError::core(cell_context.clone(), e))?;

                // Both filter cells come from the same run; their traces
                // carry the full seven columns, and the report picks the
                // raw or filtered column per cell.
                for (kalman_cell, me) in
                    [(false, run.raw_me_mm), (true, run.filtered_me_mm)]
                {
                    let rel = trace_rel(kind, level, kalman_cell, count);
                    write_trace(&stage.out_dir.join(&rel), &run.rows)?;
                    manifest.record(&stage.out_dir, &rel)?;
                    traces += 1;
                    cells.push((
                        CellKey { noise: level, kalman: kalman_cell, antennas: count },
                        me,
                    ));
                }
            }
        }
        let report = build_report(kind, &levels, &counts, &cells).map_err(|e| {
            CliError::core(format!("assemble the experiment {} report", kind.experiment_number()), e)
        })?;
        let json_rel = report_rel(kind, "json");
        let csv_rel = report_rel(kind, "csv");
        write_report_json(&stage.out_dir.join(&json_rel), &report)?;
        write_report_csv(&stage.out_dir.join(&csv_rel), &report)?;
        manifest.record(&stage.out_dir, &json_rel)?;
        manifest.record(&stage.out_dir, &csv_rel)?;
        reports.push(report);
    }
    manifest.save(&stage.out_dir)?;
    Ok(SimulateSummary { reports, traces })
}

fn is_simulation_artifact(rel: &str) -> bool {
    rel.starts_with("exp") || rel.starts_with("report_all")
}

/// Filter tuning for one report cell: the configured measurement variances
/// or, by default, the model-pair residual variances on the validation
/// split under this cell's noise level (with an independent noise stream).
fn kalman_for_cell(
    stage: &Stage,
    bundle: &LoadedCount,
    blur: &BlurSpec,
    level: NoiseLevel,
    noise_seed: u64,
) -> Result<KalmanConfig, Box<dyn std::error::Error + Send + Sync>> {
    let (r_x, r_y) = match stage.config.kalman.r_mm2 {
        Some([r_x, r_y]) => (r_x, r_y),
        None => {
            let parts = split_table(&bundle.subset, stage.config.seeds.split)?;
            let mut predictor =
                HynnPredictor { model_x: &bundle.model_x, model_y: &bundle.model_y };
            calibrate_measurement_noise(
                &mut predictor,
                &parts.validation,
                &bundle.layout,
                blur,
                NoiseSpec { level, seed: mix_seed(noise_seed, &[0xCA1]) },
            )?
        }
    };
    Ok(KalmanConfig::new(stage.config.kalman.q, r_x, r_y)?)
}

// ── report ───────────────────────────────────────────────────────────────

/// Merge the per-experiment reports into one document (CSV and JSON).
pub fn run_report(stage: &Stage) -> Result<Vec<EvalReport>, CliError> {
    let mut manifest = stage.manifest()?;
    let kinds = stage.config.route_kinds()?;
    let mut reports = Vec::with_capacity(kinds.len());
    for &kind in &kinds {
        let rel = report_rel(kind, "json");
        manifest.verify(&stage.out_dir, &rel)?;
        let report = read_report_json(&stage.out_dir.join(&rel))?;
        if report.antenna_counts != stage.config.experiments.antenna_counts {
            return Err(CliError::integrity(format!(
                "{rel} covers antenna counts {:?} but the config lists {:?}",
                report.antenna_counts, stage.config.experiments.antenna_counts
            )));
        }
        reports.push(report);
    }

    write_merged_report_csv(&stage.out_dir.join(MERGED_REPORT_CSV), &reports)?;
    write_json(&stage.out_dir.join(MERGED_REPORT_JSON), &reports)?;
    manifest.record(&stage.out_dir, MERGED_REPORT_CSV)?;
    manifest.record(&stage.out_dir, MERGED_REPORT_JSON)?;
    manifest.save(&stage.out_dir)?;
    Ok(reports)
}
