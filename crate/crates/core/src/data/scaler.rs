use serde::{Deserialize, Serialize};

use super::features::FeatureMatrix;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Per-feature z-score statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mu: Vec<f64>,
    /// Population standard deviation (divisor `n`).
    pub sigma: Vec<f64>,
    pub n_fit: usize,
}

pub fn fit_scaler(train: &FeatureMatrix) -> Result<ScalerParams> {
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::domain("cannot fit a scaler on zero rows"));
    }
    let x = train.features();
    let mu = x.column_means();
    let mut var = vec![0.0; x.cols()];
    for row in x.iter_rows() {
        for ((v, m), xi) in var.iter_mut().zip(&mu).zip(row) {
            *v += (xi - m) * (xi - m);
        }
    }
    let sigma = var.into_iter().map(|v| (v / n as f64).sqrt()).collect();
    Ok(ScalerParams {
        mu,
        sigma,
        n_fit: n,
    })
}

/// `(x - mu) / sigma` per column; zero-sigma columns become 0.
pub fn apply_scaler(data: &FeatureMatrix, params: &ScalerParams) -> Result<FeatureMatrix> {
    let x = data.features();
    if x.cols() != params.mu.len() || params.mu.len() != params.sigma.len() {
        return Err(Error::shape(format!(
            "data has {} features, scaler has {}",
            x.cols(),
            params.mu.len()
        )));
    }
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for r in 0..x.rows() {
        for (c, v) in out.row_mut(r).iter_mut().enumerate() {
            let s = params.sigma[c];
            *v = if s > 0.0 {
                (x.get(r, c) - params.mu[c]) / s
            } else {
                0.0
            };
        }
    }
    data.with_features(out)
}
