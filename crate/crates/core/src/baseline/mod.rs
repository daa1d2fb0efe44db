//! Classical classifiers and their grid-search tuner.

mod grid;
mod knn;
mod nb;
mod rf;
mod svm;

pub use grid::{grid_search, stratified_folds, ConfigScore, GridSearchResult, HyperGrid};
pub use knn::{knn_fit, knn_predict, DistanceMetric, KnnModel};
pub use nb::{nb_fit, nb_predict, NbModel};
pub use rf::{rf_fit, rf_fit_with, rf_predict, DecisionTree, RandomForest, TreeNode};
pub use svm::{
    svm_fit, svm_predict, Kernel, KernelKind, PairwiseSvm, SvmModel, SVM_MIN_ITERATIONS,
    SVM_TOLERANCE,
};

use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelClass};
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// One point of a hyperparameter grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind", rename_all = "snake_case")]
pub enum BaselineConfig {
    Svm {
        c: f64,
        kernel: KernelKind,
        gamma: f64,
    },
    Knn {
        k: usize,
        metric: DistanceMetric,
    },
    Nb {
        variance_smoothing: f64,
    },
    Rf {
        n_trees: usize,
        max_depth: Option<usize>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind", content = "state", rename_all = "snake_case")]
pub enum BaselineModel {
    Svm(SvmModel),
    Knn(KnnModel),
    Nb(NbModel),
    Rf(RandomForest),
}

/// Fits the model described by `config`. Only the random forest uses `seed`.
pub fn fit_baseline(
    config: &BaselineConfig,
    train: &FeatureMatrix,
    seed: u64,
) -> Result<BaselineModel> {
    Ok(match *config {
        BaselineConfig::Svm { c, kernel, gamma } => {
            BaselineModel::Svm(svm_fit(train, c, kernel, gamma)?)
        }
        BaselineConfig::Knn { k, metric } => BaselineModel::Knn(knn_fit(train, k, metric)?),
        BaselineConfig::Nb { variance_smoothing } => {
            BaselineModel::Nb(nb_fit(train, variance_smoothing)?)
        }
        BaselineConfig::Rf { n_trees, max_depth } => {
            BaselineModel::Rf(rf_fit(train, n_trees, max_depth, seed)?)
        }
    })
}

impl BaselineModel {
    pub fn n_features(&self) -> usize {
        match self {
            BaselineModel::Svm(m) => m.n_features(),
            BaselineModel::Knn(m) => m.n_features(),
            BaselineModel::Nb(m) => m.n_features(),
            BaselineModel::Rf(m) => m.n_features(),
        }
    }

    pub fn predict_one(&self, x: &[f64]) -> LabelClass {
        match self {
            BaselineModel::Svm(m) => m.predict_one(x),
            BaselineModel::Knn(m) => m.predict_one(x),
            BaselineModel::Nb(m) => m.predict_one(x),
            BaselineModel::Rf(m) => m.predict_one(x),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<LabelClass>> {
        if x.cols() != self.n_features() {
            return Err(Error::shape(format!(
                "model expects {} features, got {}",
                self.n_features(),
                x.cols()
            )));
        }
        Ok(x.iter_rows().map(|r| self.predict_one(r)).collect())
    }
}
