use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{hex, DatasetSource, ExperimentConfig, ModelSpec, SchemaSource};
use super::pca_export::write_pca;
use super::synthetic::generate_synthetic;
use crate::baseline::{fit_baseline, grid_search, GridSearchResult};
use crate::data::{
    apply_scaler, fit_scaler, impute_missing, ingest_csv, round_grades, select_midpoint_features,
    stratified_split, FeatureMatrix, GradebookTable, ScalerParams, Schema, SplitConfig,
};
use crate::error::{Error, Result};
use crate::eval::{comparison_json, comparison_table, evaluate, EvaluationReport};
use crate::nn::{train, MODEL_FORMAT_VERSION};
use crate::numeric::RngStream;

const SPLIT_STREAM: u64 = 1;
const MODEL_STREAM_BASE: u64 = 1000;
const FINAL_FIT_STREAM: u64 = u64::MAX;

/// Seed handed to model `index` of a run with global seed `seed`.
pub fn model_seed(seed: u64, index: usize) -> u64 {
    RngStream::derive_seed(seed, MODEL_STREAM_BASE + index as u64)
}

/// Output of the shared preprocessing pipeline.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub table: GradebookTable,
    pub features: FeatureMatrix,
    pub scaler: ScalerParams,
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    /// SHA-256 of every input file read.
    pub inputs: BTreeMap<String, String>,
}

fn file_hash(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(bytes)))
}

fn load_table(
    cfg: &ExperimentConfig,
    inputs: &mut BTreeMap<String, String>,
) -> Result<GradebookTable> {
    match &cfg.dataset {
        DatasetSource::Synthetic { spec } => generate_synthetic(spec),
        DatasetSource::Csv { path, schema } => {
            let schema = match schema {
                SchemaSource::Inline(s) => s.clone(),
                SchemaSource::Path(p) => {
                    let p = cfg.resolve(p);
                    inputs.insert(p.display().to_string(), file_hash(&p)?);
                    Schema::from_json_file(&p)?
                }
            };
            let csv = cfg.resolve(path);
            inputs.insert(csv.display().to_string(), file_hash(&csv)?);
            ingest_csv(&csv, &schema)
        }
    }
}

/// ingest or generate, impute, round, label, select midpoint features,
/// split, then scale both parts with statistics of the training part.
pub fn prepare_data(cfg: &ExperimentConfig) -> Result<PreparedData> {
    let mut inputs = BTreeMap::new();
    let raw = load_table(cfg, &mut inputs).map_err(|e| e.in_stage("load"))?;
    let table = round_grades(&impute_missing(&raw));
    let features = select_midpoint_features(&table).map_err(|e| e.in_stage("features"))?;
    let split = SplitConfig {
        train_fraction: cfg.split.train_fraction,
        seed: RngStream::derive_seed(cfg.seed, SPLIT_STREAM),
        stratified: cfg.split.stratified,
    };
    let (train_raw, test_raw) =
        stratified_split(&features, &split).map_err(|e| e.in_stage("split"))?;
    let (scaler, train, test) = (|| {
        let scaler = fit_scaler(&train_raw)?;
        let train = apply_scaler(&train_raw, &scaler)?;
        let test = apply_scaler(&test_raw, &scaler)?;
        Ok((scaler, train, test))
    })()
    .map_err(|e: Error| e.in_stage("scale"))?;
    Ok(PreparedData {
        table,
        features,
        scaler,
        train,
        test,
        inputs,
    })
}

struct ModelOutcome {
    report: EvaluationReport,
    grid: Option<GridSearchResult>,
    model_json: String,
}

fn run_model(
    cfg: &ExperimentConfig,
    data: &PreparedData,
    index: usize,
    spec: &ModelSpec,
) -> Result<ModelOutcome> {
    let seed = model_seed(cfg.seed, index);
    let name = spec.display_name();
    match spec {
        ModelSpec::Baseline(grid) => {
            let result = grid_search(grid, &data.train, cfg.cv_folds, seed)?;
            let model = fit_baseline(
                &result.best_config,
                &data.train,
                RngStream::derive_seed(seed, FINAL_FIT_STREAM),
            )?;
            let report = evaluate(&model, &data.test, name, &cfg.name, seed)?;
            Ok(ModelOutcome {
                report,
                grid: Some(result),
                model_json: serde_json::to_string_pretty(&model)?,
            })
        }
        net => {
            let arch = net.architecture().expect("network spec");
            let arch = arch.with_seed(RngStream::derive_seed(seed, arch.seed()));
            let trained = train(&arch, &data.train)?;
            let report = evaluate(&trained, &data.test, name, &cfg.name, seed)?;
            Ok(ModelOutcome {
                report,
                grid: None,
                model_json: serde_json::to_string(&trained)?,
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub status: RunStatus,
    pub tool: String,
    pub tool_version: String,
    pub rng_algorithm: String,
    pub model_format_version: u32,
    pub seed: u64,
    pub config_hash: String,
    pub inputs: BTreeMap<String, String>,
    /// SHA-256 of every artifact, keyed by path relative to the output directory.
    pub files: BTreeMap<String, String>,
    pub notes: Vec<String>,
    pub failure: Option<Failure>,
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
    /// SHA-256 of `manifest.json`.
    pub manifest_hash: String,
    pub reports: Vec<EvaluationReport>,
    pub grid_results: Vec<Option<GridSearchResult>>,
    pub scaler: ScalerParams,
    pub table: String,
}

struct ArtifactWriter {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl ArtifactWriter {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.files
            .insert(rel.to_string(), hex(&Sha256::digest(bytes)));
        Ok(())
    }

    fn csv(&mut self, rel: &str, data: &FeatureMatrix) -> Result<()> {
        let mut buf = Vec::new();
        data.write_csv(&mut buf)?;
        self.write(rel, &buf)
    }

    fn json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text.as_bytes())
    }
}

fn failure_of(e: &Error) -> Failure {
    match e {
        Error::Stage { stage, source } => Failure {
            stage: stage.clone(),
            message: source.to_string(),
        },
        other => Failure {
            stage: "run".into(),
            message: other.to_string(),
        },
    }
}

fn base_manifest(cfg: &ExperimentConfig) -> Manifest {
    Manifest {
        status: RunStatus::Ok,
        tool: "earlywarn".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        rng_algorithm: RngStream::ALGORITHM.into(),
        model_format_version: MODEL_FORMAT_VERSION,
        seed: cfg.seed,
        config_hash: cfg.config_hash(),
        inputs: BTreeMap::new(),
        files: BTreeMap::new(),
        notes: Vec::new(),
        failure: None,
    }
}

/// Runs the whole experiment and writes every artifact under the output
/// directory. If a stage fails, the artifacts written so far are kept and
/// `manifest.json` records the failing stage; the error is returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    cfg.validate()?;
    let root = cfg.output_path();
    std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
    let mut w = ArtifactWriter {
        root: root.clone(),
        files: BTreeMap::new(),
    };
    let mut manifest = base_manifest(cfg);

    match run_stages(cfg, &mut w, &mut manifest) {
        Ok((reports, grid_results, scaler, table)) => {
            manifest.files = std::mem::take(&mut w.files);
            let mut text = serde_json::to_string_pretty(&manifest)?;
            text.push('\n');
            let path = root.join("manifest.json");
            std::fs::write(&path, &text).map_err(|e| Error::io(&path, e))?;
            Ok(RunArtifacts {
                output_dir: root,
                manifest_hash: hex(&Sha256::digest(text.as_bytes())),
                manifest,
                reports,
                grid_results,
                scaler,
                table,
            })
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            manifest.failure = Some(failure_of(&e));
            manifest.files = std::mem::take(&mut w.files);
            if let Ok(mut text) = serde_json::to_string_pretty(&manifest) {
                text.push('\n');
                let _ = std::fs::write(root.join("manifest.json"), text);
            }
            Err(e)
        }
    }
}

type StageOutput = (
    Vec<EvaluationReport>,
    Vec<Option<GridSearchResult>>,
    ScalerParams,
    String,
);

fn run_stages(
    cfg: &ExperimentConfig,
    w: &mut ArtifactWriter,
    manifest: &mut Manifest,
) -> Result<StageOutput> {
    let write = |e: Error| e.in_stage("write");
    w.json("config.json", &cfg.location_free()).map_err(write)?;
    let data = prepare_data(cfg)?;
    manifest.inputs = data.inputs.clone();

    w.csv("data/features.csv", &data.features).map_err(write)?;
    w.csv("data/train_scaled.csv", &data.train).map_err(write)?;
    w.csv("data/test_scaled.csv", &data.test).map_err(write)?;
    w.json("scaler.json", &data.scaler).map_err(write)?;

    if data.features.n_features() >= 2 {
        let all = apply_scaler(&data.features, &data.scaler).map_err(|e| e.in_stage("pca"))?;
        let mut buf = Vec::new();
        write_pca(&all, &mut buf).map_err(|e| e.in_stage("pca"))?;
        w.write("pca.csv", &buf).map_err(write)?;
    } else {
        manifest
            .notes
            .push("pca.csv skipped: fewer than 2 midpoint features".into());
    }

    let outcomes: Vec<Result<ModelOutcome>> = cfg
        .models
        .par_iter()
        .enumerate()
        .map(|(i, spec)| {
            run_model(cfg, &data, i, spec)
                .map_err(|e| e.in_stage(&format!("model {i} ({})", spec.display_name())))
        })
        .collect();

    let mut reports = Vec::new();
    let mut grids = Vec::new();
    for (i, (spec, outcome)) in cfg.models.iter().zip(outcomes).enumerate() {
        let o = outcome?;
        let stem = format!("{i:02}_{}", spec.slug());
        w.write(&format!("models/{stem}.json"), o.model_json.as_bytes())
            .map_err(write)?;
        if let Some(g) = &o.grid {
            w.json(&format!("grid/{stem}.json"), g).map_err(write)?;
        }
        w.json(&format!("reports/{stem}.json"), &o.report)
            .map_err(write)?;
        reports.push(o.report);
        grids.push(o.grid);
    }

    let table = comparison_table(&reports);
    w.write("comparison.txt", table.as_bytes()).map_err(write)?;
    let mut json = comparison_json(&reports)?;
    json.push('\n');
    w.write("comparison.json", json.as_bytes()).map_err(write)?;
    Ok((reports, grids, data.scaler, table))
}

/// Runs the preprocessing pipeline and writes `pca.csv` for all rows,
/// scaled with the training statistics.
pub fn run_pca(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let data = prepare_data(cfg)?;
    let all = apply_scaler(&data.features, &data.scaler).map_err(|e| e.in_stage("pca"))?;
    super::export_pca(&all, out).map_err(|e| e.in_stage("pca"))?;
    Ok(())
}
