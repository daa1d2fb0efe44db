//! Experiment orchestration: synthetic gradebooks, config files, full runs
//! with on-disk artifacts, and PCA plot data.

mod config;
mod pca_export;
mod run;
mod synthetic;

pub use config::{DatasetSource, ExperimentConfig, ExperimentSplit, ModelSpec, SchemaSource};
pub use pca_export::{export_pca, pca_points};
pub use run::{
    model_seed, prepare_data, run_experiment, run_pca, Failure, Manifest, PreparedData,
    RunArtifacts, RunStatus,
};
pub use synthetic::{generate_synthetic, write_gradebook_csv, ClassProfile, SyntheticSpec};
