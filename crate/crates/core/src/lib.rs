//! Midpoint-of-course student performance prediction.
//!
//! The crate covers the whole pipeline, from gradebook ingestion to model
//! comparison reports:
//!
//! - [`data`]: gradebook model, cleaning, G/F/W labels, midpoint feature
//!   selection, z-score scaling and stratified splitting.
//! - [`numeric`]: dense matrices, the seeded random stream and PCA.
//! - [`nn`]: a from-scratch 1D-CNN and LSTM classifier with manual
//!   backpropagation and adam.
//! - [`baseline`]: SVM, K-NN, Gaussian naive Bayes and random forest, tuned by
//!   grid search over stratified cross-validation.
//! - [`eval`]: confusion matrices, accuracy/precision/recall/F-score and
//!   evaluation reports.
//! - [`experiment`]: synthetic gradebooks, config-driven runs and PCA export.
//!
//! Every stochastic step draws from [`numeric::RngStream`], so a run is fully
//! determined by its inputs and seed.

#![allow(clippy::needless_range_loop)]

pub mod baseline;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod nn;
pub mod numeric;

pub use data::{FeatureMatrix, GradebookTable, LabelClass};
pub use error::{Error, ErrorKind, Result};
pub use numeric::{Matrix, RngStream};
