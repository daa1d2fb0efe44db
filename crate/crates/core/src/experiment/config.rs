use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::synthetic::SyntheticSpec;
use crate::baseline::HyperGrid;
use crate::data::Schema;
use crate::error::{Error, Result};
use crate::nn::{Architecture, CnnSpec, LstmSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemaSource {
    Path(PathBuf),
    Inline(Schema),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    Csv { path: PathBuf, schema: SchemaSource },
    Synthetic { spec: SyntheticSpec },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSplit {
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_true")]
    pub stratified: bool,
}

fn default_train_fraction() -> f64 {
    0.8
}
fn default_true() -> bool {
    true
}
fn default_folds() -> usize {
    5
}
fn default_dataset_name() -> String {
    "dataset".into()
}

impl Default for ExperimentSplit {
    fn default() -> Self {
        ExperimentSplit {
            train_fraction: 0.8,
            stratified: true,
        }
    }
}

/// A model entry: a network architecture, or a baseline grid to search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Cnn(CnnSpec),
    Lstm(LstmSpec),
    Baseline(HyperGrid),
}

impl ModelSpec {
    pub fn display_name(&self) -> &'static str {
        match self {
            ModelSpec::Cnn(_) => "CNN",
            ModelSpec::Lstm(_) => "RNN-LSTM",
            ModelSpec::Baseline(g) => g.display_name(),
        }
    }

    /// File-name stem for per-model artifacts.
    pub fn slug(&self) -> &'static str {
        match self {
            ModelSpec::Cnn(_) => "cnn",
            ModelSpec::Lstm(_) => "lstm",
            ModelSpec::Baseline(g) => g.kind(),
        }
    }

    pub fn architecture(&self) -> Option<Architecture> {
        match self {
            ModelSpec::Cnn(s) => Some(Architecture::Cnn(s.clone())),
            ModelSpec::Lstm(s) => Some(Architecture::Lstm(s.clone())),
            ModelSpec::Baseline(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_dataset_name")]
    pub name: String,
    pub seed: u64,
    pub dataset: DatasetSource,
    #[serde(default)]
    pub split: ExperimentSplit,
    pub models: Vec<ModelSpec>,
    #[serde(default = "default_folds")]
    pub cv_folds: usize,
    pub output_dir: PathBuf,
    /// Directory against which relative paths resolve. Not part of the
    /// config file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
        let mut cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_json(&text, &base).map_err(|e| match e {
            Error::Json(j) => Error::config(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::config("config lists no models"));
        }
        if self.cv_folds < 2 {
            return Err(Error::config(format!(
                "cv_folds = {} must be at least 2",
                self.cv_folds
            )));
        }
        let split = crate::data::SplitConfig {
            train_fraction: self.split.train_fraction,
            seed: self.seed,
            stratified: self.split.stratified,
        };
        split.validate()?;
        if let DatasetSource::Synthetic { spec } = &self.dataset {
            spec.validate()?;
        }
        for m in &self.models {
            match m {
                ModelSpec::Baseline(g) if g.cardinality() == 0 => {
                    return Err(Error::config(format!(
                        "{} grid has an empty axis",
                        g.kind()
                    )));
                }
                ModelSpec::Baseline(_) => {}
                other => other.architecture().expect("network").validate()?,
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// SHA-256 of the config with `output_dir` blanked, so relocating the
    /// output leaves the hash unchanged. Every other field contributes.
    pub fn config_hash(&self) -> String {
        let bytes = serde_json::to_vec(&self.location_free()).expect("config serializes");
        hex(&Sha256::digest(bytes))
    }

    /// Copy with `output_dir` blanked; this is what gets hashed and archived.
    pub fn location_free(&self) -> ExperimentConfig {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        c
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
