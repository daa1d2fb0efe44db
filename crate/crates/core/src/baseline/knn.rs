use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelClass};
use crate::error::{Error, Result};
use crate::numeric::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMetric {
    Euclidean,
    Manhattan,
}

impl DistanceMetric {
    /// Euclidean distances are compared squared; the ordering is the same.
    fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            DistanceMetric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum(),
            DistanceMetric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub metric: DistanceMetric,
    train: Matrix,
    labels: Vec<LabelClass>,
}

pub fn knn_fit(train: &FeatureMatrix, k: usize, metric: DistanceMetric) -> Result<KnnModel> {
    if k == 0 || k > train.n_rows() {
        return Err(Error::domain(format!(
            "k = {k} must be in 1..={}",
            train.n_rows()
        )));
    }
    Ok(KnnModel {
        k,
        metric,
        train: train.features().clone(),
        labels: train.labels().to_vec(),
    })
}

impl KnnModel {
    pub fn n_features(&self) -> usize {
        self.train.cols()
    }

    /// Majority vote of the `k` nearest rows. Equal distances favour the
    /// lower row index; equal votes favour the worse class.
    pub fn predict_one(&self, x: &[f64]) -> LabelClass {
        let mut dist: Vec<(f64, usize)> = self
            .train
            .iter_rows()
            .enumerate()
            .map(|(i, row)| (self.metric.eval(row, x), i))
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = [0usize; 3];
        for &(_, i) in dist.iter().take(self.k) {
            votes[self.labels[i].index()] += 1;
        }
        LabelClass::majority(&votes)
    }
}

pub fn knn_predict(model: &KnnModel, x: &[f64]) -> LabelClass {
    model.predict_one(x)
}
