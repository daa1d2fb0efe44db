use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelClass};
use crate::error::{Error, Result};

/// Log-scores closer than this are treated as tied.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct ClassStats {
    log_prior: f64,
    means: Vec<f64>,
    variances: Vec<f64>,
}

/// Gaussian naive Bayes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub variance_smoothing: f64,
    /// Variance added to every class-conditional variance.
    pub epsilon: f64,
    classes: [Option<ClassStats>; 3],
    n_features: usize,
}

fn population_variance(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Fits priors from class frequencies and per-feature normal densities.
/// Every variance is increased by `variance_smoothing` times the largest
/// feature variance of the whole training set (or by `variance_smoothing`
/// itself when every feature is constant).
pub fn nb_fit(train: &FeatureMatrix, variance_smoothing: f64) -> Result<NbModel> {
    let n = train.n_rows();
    if n == 0 {
        return Err(Error::domain("naive Bayes needs at least one row"));
    }
    if !(variance_smoothing.is_finite() && variance_smoothing > 0.0) {
        return Err(Error::config(format!(
            "variance_smoothing {variance_smoothing} must be positive"
        )));
    }
    let x = train.features();
    let d = x.cols();
    let max_var = (0..d)
        .map(|c| population_variance((0..n).map(|r| x.get(r, c))).1)
        .fold(0.0, f64::max);
    let epsilon = if max_var > 0.0 {
        variance_smoothing * max_var
    } else {
        variance_smoothing
    };

    let mut classes: [Option<ClassStats>; 3] = [None, None, None];
    for class in LabelClass::ALL {
        let members: Vec<usize> = (0..n).filter(|&i| train.labels()[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        let mut means = Vec::with_capacity(d);
        let mut variances = Vec::with_capacity(d);
        for c in 0..d {
            let (m, v) = population_variance(members.iter().map(|&r| x.get(r, c)));
            means.push(m);
            variances.push(v + epsilon);
        }
        classes[class.index()] = Some(ClassStats {
            log_prior: (members.len() as f64 / n as f64).ln(),
            means,
            variances,
        });
    }
    Ok(NbModel {
        variance_smoothing,
        epsilon,
        classes,
        n_features: d,
    })
}

impl NbModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Log-prior plus summed log-densities per class; `-inf` for classes
    /// absent from training.
    pub fn log_posteriors(&self, x: &[f64]) -> [f64; 3] {
        let mut out = [f64::NEG_INFINITY; 3];
        for (slot, stats) in out.iter_mut().zip(&self.classes) {
            if let Some(s) = stats {
                let ll: f64 = x
                    .iter()
                    .zip(&s.means)
                    .zip(&s.variances)
                    .map(|((xi, m), v)| {
                        -0.5 * (std::f64::consts::TAU * v).ln() - (xi - m) * (xi - m) / (2.0 * v)
                    })
                    .sum();
                *slot = s.log_prior + ll;
            }
        }
        out
    }

    pub fn predict_one(&self, x: &[f64]) -> LabelClass {
        let scores = self.log_posteriors(x);
        LabelClass::ALL[LabelClass::argmax_worse_on_tie(&scores, TIE_TOLERANCE)]
    }
}

pub fn nb_predict(model: &NbModel, x: &[f64]) -> LabelClass {
    model.predict_one(x)
}
