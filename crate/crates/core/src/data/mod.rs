//! Gradebook data model and preprocessing.
//!
//! The pipeline order is fixed: ingest, impute, round, label, midpoint
//! selection, split, then a scaler fitted on the training rows only and
//! applied to both parts.

mod clean;
mod features;
mod ingest;
mod label;
mod scaler;
mod split;
mod table;

pub use clean::{impute_missing, round_grades};
pub use features::{select_midpoint_features, FeatureMatrix};
pub use ingest::{ingest_csv, ingest_reader, ColumnRole, ColumnSpec, Schema};
pub use label::{derive_label, LabelClass};
pub use scaler::{apply_scaler, fit_scaler, ScalerParams};
pub use split::{largest_remainder, stratified_split, SplitConfig};
pub use table::{AssessmentMeta, GradebookTable, StudentRecord};
