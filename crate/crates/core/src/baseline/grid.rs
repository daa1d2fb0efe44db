use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_baseline, BaselineConfig, DistanceMetric, KernelKind};
use crate::data::{FeatureMatrix, LabelClass};
use crate::error::{Error, Result};
use crate::numeric::RngStream;

/// Substream key for fold assignment.
const FOLD_STREAM: u64 = 0xF01D;

fn svm_c() -> Vec<f64> {
    vec![0.1, 1.0, 10.0, 100.0]
}
fn svm_kernel() -> Vec<KernelKind> {
    vec![KernelKind::Linear, KernelKind::Rbf]
}
fn svm_gamma() -> Vec<f64> {
    vec![0.01, 0.1, 1.0]
}
fn knn_k() -> Vec<usize> {
    vec![1, 3, 5, 7, 9, 11, 13, 15]
}
fn knn_metric() -> Vec<DistanceMetric> {
    vec![DistanceMetric::Euclidean, DistanceMetric::Manhattan]
}
fn nb_smoothing() -> Vec<f64> {
    vec![1e-9, 1e-8, 1e-7]
}
fn rf_trees() -> Vec<usize> {
    vec![50, 100, 200]
}
fn rf_depth() -> Vec<Option<usize>> {
    vec![None, Some(5), Some(10)]
}

/// Candidate values per hyperparameter. Omitted axes take the default lists.
/// Configurations are enumerated with the first axis outermost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HyperGrid {
    Svm {
        #[serde(default = "svm_c")]
        c: Vec<f64>,
        #[serde(default = "svm_kernel")]
        kernel: Vec<KernelKind>,
        #[serde(default = "svm_gamma")]
        gamma: Vec<f64>,
    },
    Knn {
        #[serde(default = "knn_k")]
        k: Vec<usize>,
        #[serde(default = "knn_metric")]
        metric: Vec<DistanceMetric>,
    },
    Nb {
        #[serde(default = "nb_smoothing")]
        variance_smoothing: Vec<f64>,
    },
    Rf {
        #[serde(default = "rf_trees")]
        n_trees: Vec<usize>,
        #[serde(default = "rf_depth")]
        max_depth: Vec<Option<usize>>,
    },
}

impl HyperGrid {
    pub fn default_svm() -> Self {
        HyperGrid::Svm {
            c: svm_c(),
            kernel: svm_kernel(),
            gamma: svm_gamma(),
        }
    }
    pub fn default_knn() -> Self {
        HyperGrid::Knn {
            k: knn_k(),
            metric: knn_metric(),
        }
    }
    pub fn default_nb() -> Self {
        HyperGrid::Nb {
            variance_smoothing: nb_smoothing(),
        }
    }
    pub fn default_rf() -> Self {
        HyperGrid::Rf {
            n_trees: rf_trees(),
            max_depth: rf_depth(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HyperGrid::Svm { .. } => "svm",
            HyperGrid::Knn { .. } => "knn",
            HyperGrid::Nb { .. } => "nb",
            HyperGrid::Rf { .. } => "rf",
        }
    }

    /// Display name used in comparison tables.
    pub fn display_name(&self) -> &'static str {
        match self {
            HyperGrid::Svm { .. } => "Optimized SVM",
            HyperGrid::Knn { .. } => "Optimized K-NN",
            HyperGrid::Nb { .. } => "Optimized NB",
            HyperGrid::Rf { .. } => "Optimized RF",
        }
    }

    pub fn cardinality(&self) -> usize {
        match self {
            HyperGrid::Svm { c, kernel, gamma } => c.len() * kernel.len() * gamma.len(),
            HyperGrid::Knn { k, metric } => k.len() * metric.len(),
            HyperGrid::Nb { variance_smoothing } => variance_smoothing.len(),
            HyperGrid::Rf { n_trees, max_depth } => n_trees.len() * max_depth.len(),
        }
    }

    pub fn configs(&self) -> Vec<BaselineConfig> {
        let mut out = Vec::with_capacity(self.cardinality());
        match self {
            HyperGrid::Svm { c, kernel, gamma } => {
                for &c in c {
                    for &kernel in kernel {
                        for &gamma in gamma {
                            out.push(BaselineConfig::Svm { c, kernel, gamma });
                        }
                    }
                }
            }
            HyperGrid::Knn { k, metric } => {
                for &k in k {
                    for &metric in metric {
                        out.push(BaselineConfig::Knn { k, metric });
                    }
                }
            }
            HyperGrid::Nb { variance_smoothing } => {
                for &variance_smoothing in variance_smoothing {
                    out.push(BaselineConfig::Nb { variance_smoothing });
                }
            }
            HyperGrid::Rf { n_trees, max_depth } => {
                for &n_trees in n_trees {
                    for &max_depth in max_depth {
                        out.push(BaselineConfig::Rf { n_trees, max_depth });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigScore {
    pub config: BaselineConfig,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub model_kind: String,
    pub folds: usize,
    pub seed: u64,
    pub best_index: usize,
    pub best_config: BaselineConfig,
    pub best_cv_score: f64,
    pub per_config_scores: Vec<ConfigScore>,
}

/// Assigns every row to one of `folds` folds. Each class is shuffled and
/// dealt round-robin, continuing where the previous class stopped, so each
/// fold gets a member of every class that has at least `folds` rows.
/// Returns the held-out row indices of each fold in ascending order.
pub fn stratified_folds(labels: &[LabelClass], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::config(format!("folds = {folds} must be at least 2")));
    }
    if labels.len() < folds {
        return Err(Error::domain(format!(
            "{} rows cannot fill {folds} folds",
            labels.len()
        )));
    }
    let mut rng = RngStream::new(seed).derive(FOLD_STREAM);
    let mut out = vec![Vec::new(); folds];
    let mut next = 0;
    for class in LabelClass::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut members);
        for i in members {
            out[next].push(i);
            next = (next + 1) % folds;
        }
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

fn fold_accuracy(
    config: &BaselineConfig,
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    seed: u64,
) -> Result<f64> {
    let counts = train.class_counts();
    let predictions: Vec<LabelClass> = if counts.iter().filter(|&&c| c > 0).count() == 1 {
        // A fold that saw a single class can only predict it.
        vec![train.labels()[0]; test.n_rows()]
    } else {
        let model = fit_baseline(config, train, seed)?;
        (0..test.n_rows())
            .map(|i| model.predict_one(test.row(i)))
            .collect()
    };
    let hits = predictions
        .iter()
        .zip(test.labels())
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / test.n_rows() as f64)
}

/// Exhaustive grid search scored by mean stratified k-fold accuracy on
/// `train`. Grid points run in parallel; config `i`, fold `f` seeds its
/// model with substream `(i, f)` of `seed`, so the result does not depend
/// on scheduling. Ties go to the earliest config.
pub fn grid_search(
    grid: &HyperGrid,
    train: &FeatureMatrix,
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    let configs = grid.configs();
    if configs.is_empty() {
        return Err(Error::domain(format!(
            "{} grid has an empty axis",
            grid.kind()
        )));
    }
    let assignment = stratified_folds(train.labels(), folds, seed)?;
    let splits: Vec<(FeatureMatrix, FeatureMatrix)> = assignment
        .iter()
        .map(|held| {
            let mut is_held = vec![false; train.n_rows()];
            for &i in held {
                is_held[i] = true;
            }
            let rest: Vec<usize> = (0..train.n_rows()).filter(|&i| !is_held[i]).collect();
            (train.subset(&rest), train.subset(held))
        })
        .collect();

    let scores: Vec<ConfigScore> = configs
        .par_iter()
        .enumerate()
        .map(|(ci, config)| {
            let config_seed = RngStream::derive_seed(seed, ci as u64);
            let fold_accuracies = splits
                .iter()
                .enumerate()
                .map(|(fi, (tr, te))| {
                    fold_accuracy(
                        config,
                        tr,
                        te,
                        RngStream::derive_seed(config_seed, fi as u64),
                    )
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / fold_accuracies.len() as f64;
            Ok(ConfigScore {
                config: config.clone(),
                fold_accuracies,
                mean_accuracy,
            })
        })
        .collect::<Result<_>>()?;

    let best_index = argmax_first(scores.iter().map(|s| s.mean_accuracy));
    Ok(GridSearchResult {
        model_kind: grid.kind().to_string(),
        folds,
        seed,
        best_index,
        best_config: scores[best_index].config.clone(),
        best_cv_score: scores[best_index].mean_accuracy,
        per_config_scores: scores,
    })
}

fn argmax_first(values: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (i, v) in values.enumerate() {
        if v > best.1 {
            best = (i, v);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use LabelClass::*;

    #[test]
    fn default_cardinalities() {
        assert_eq!(HyperGrid::default_svm().cardinality(), 24);
        assert_eq!(HyperGrid::default_knn().configs().len(), 16);
        assert_eq!(HyperGrid::default_nb().configs().len(), 3);
        assert_eq!(HyperGrid::default_rf().configs().len(), 9);
    }

    #[test]
    fn lexicographic_order() {
        let g = HyperGrid::Knn {
            k: vec![1, 3],
            metric: knn_metric(),
        };
        let ks: Vec<_> = g
            .configs()
            .into_iter()
            .map(|c| match c {
                BaselineConfig::Knn { k, metric } => (k, metric),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(
            ks,
            vec![
                (1, DistanceMetric::Euclidean),
                (1, DistanceMetric::Manhattan),
                (3, DistanceMetric::Euclidean),
                (3, DistanceMetric::Manhattan)
            ]
        );
    }

    #[test]
    fn json_defaults_fill_missing_axes() {
        let g: HyperGrid = serde_json::from_str(r#"{"model_kind":"svm","c":[1.0]}"#).unwrap();
        assert_eq!(g.cardinality(), 6);
        assert!(serde_json::from_str::<HyperGrid>(r#"{"model_kind":"knn","kk":[1]}"#).is_err());
    }

    #[test]
    fn folds_partition_and_stratify() {
        let labels: Vec<LabelClass> = (0..53)
            .map(|i| {
                if i < 30 {
                    G
                } else if i < 48 {
                    F
                } else {
                    W
                }
            })
            .collect();
        let folds = stratified_folds(&labels, 5, 11).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..53).collect::<Vec<_>>());
        for f in &folds {
            for class in LabelClass::ALL {
                assert!(f.iter().any(|&i| labels[i] == class));
            }
            assert!((10..=11).contains(&f.len()));
        }
        assert_eq!(folds, stratified_folds(&labels, 5, 11).unwrap());
    }

    #[test]
    fn argmax_prefers_earliest() {
        assert_eq!(argmax_first([0.5, 0.9, 0.9, 0.1].into_iter()), 1);
        assert_eq!(argmax_first([0.0, 0.0].into_iter()), 0);
    }

    #[test]
    fn empty_axis_is_domain_error() {
        let data = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]], vec![G, W]).unwrap();
        let g = HyperGrid::Knn {
            k: vec![],
            metric: knn_metric(),
        };
        assert!(matches!(
            grid_search(&g, &data, 2, 0),
            Err(Error::Domain(_))
        ));
    }
}
