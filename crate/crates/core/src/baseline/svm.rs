//! One-vs-one soft-margin SVM trained by SMO with second-order working-set
//! selection.

use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelClass};
use crate::error::{Error, Result};

/// KKT violation tolerance at which SMO stops.
pub const SVM_TOLERANCE: f64 = 1e-3;
/// SMO iterations per pairwise problem are capped at
/// `max(SVM_MIN_ITERATIONS, 100 * n_pair)`.
pub const SVM_MIN_ITERATIONS: usize = 1_000_000;
const TAU: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Linear,
    Rbf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: KernelKind,
    pub gamma: f64,
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelKind::Rbf => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-self.gamma * d2).exp()
            }
        }
    }
}

/// Binary machine for one class pair. `y = +1` is the worse class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseSvm {
    pub negative: LabelClass,
    pub positive: LabelClass,
    pub support_vectors: Vec<Vec<f64>>,
    pub alpha: Vec<f64>,
    pub y: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
}

impl PairwiseSvm {
    pub fn decision(&self, kernel: &Kernel, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(self.alpha.iter().zip(&self.y))
            .map(|(sv, (a, y))| a * y * kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub c: f64,
    pub kernel: Kernel,
    pub machines: Vec<PairwiseSvm>,
    n_features: usize,
}

struct DualSolution {
    alpha: Vec<f64>,
    bias: f64,
    iterations: usize,
}

/// Solves min 1/2 a'Qa - e'a subject to 0 <= a <= c and y'a = 0.
fn smo(k: &[Vec<f64>], y: &[f64], c: f64, max_iter: usize) -> Option<DualSolution> {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let in_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iter = 0;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut obj_min = f64::INFINITY;
        if let Some(i) = i_sel {
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = y[t] * grad[t];
                gmax2 = gmax2.max(v);
                let diff = gmax + v;
                if diff > 0.0 {
                    let quad = (k[i][i] + k[t][t] - 2.0 * k[i][t]).max(TAU);
                    let obj = -diff * diff / quad;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            break;
        };
        if gmax + gmax2 < SVM_TOLERANCE {
            break;
        }
        if iter >= max_iter {
            return None;
        }
        iter += 1;

        let (ai, aj) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (k[i][i] + k[j][j] + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k[i][i] + k[j][j] - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
        }
        let (di, dj) = (alpha[i] - ai, alpha[j] - aj);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    // Bias from free vectors, or the midpoint of the feasible interval.
    let (mut sum, mut n_free) = (0.0, 0usize);
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += yg;
            n_free += 1;
        } else if (alpha[t] >= c && y[t] < 0.0) || (alpha[t] <= 0.0 && y[t] > 0.0) {
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if n_free > 0 {
        sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    Some(DualSolution {
        alpha,
        bias: -rho,
        iterations: iter,
    })
}

pub fn svm_fit(train: &FeatureMatrix, c: f64, kernel: KernelKind, gamma: f64) -> Result<SvmModel> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::config(format!("C = {c} must be positive")));
    }
    if kernel == KernelKind::Rbf && !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::config(format!(
            "rbf gamma = {gamma} must be positive"
        )));
    }
    let kernel = Kernel {
        kind: kernel,
        gamma,
    };
    let present: Vec<LabelClass> = LabelClass::ALL
        .into_iter()
        .filter(|cl| train.labels().contains(cl))
        .collect();
    if present.len() < 2 {
        return Err(Error::domain("SVM needs at least 2 classes"));
    }
    let mut machines = Vec::new();
    for (a, &neg) in present.iter().enumerate() {
        for &pos in &present[a + 1..] {
            let idx: Vec<usize> = (0..train.n_rows())
                .filter(|&i| matches!(train.labels()[i], l if l == neg || l == pos))
                .collect();
            let y: Vec<f64> = idx
                .iter()
                .map(|&i| if train.labels()[i] == pos { 1.0 } else { -1.0 })
                .collect();
            let k: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| {
                    idx.iter()
                        .map(|&j| kernel.eval(train.row(i), train.row(j)))
                        .collect()
                })
                .collect();
            let max_iter = SVM_MIN_ITERATIONS.max(100 * idx.len());
            let sol = smo(&k, &y, c, max_iter).ok_or_else(|| {
                Error::SvmNotConverged(neg.to_string(), pos.to_string(), max_iter)
            })?;
            let mut m = PairwiseSvm {
                negative: neg,
                positive: pos,
                support_vectors: Vec::new(),
                alpha: Vec::new(),
                y: Vec::new(),
                bias: sol.bias,
                iterations: sol.iterations,
            };
            for (t, &i) in idx.iter().enumerate() {
                if sol.alpha[t] > 0.0 {
                    m.support_vectors.push(train.row(i).to_vec());
                    m.alpha.push(sol.alpha[t]);
                    m.y.push(y[t]);
                }
            }
            machines.push(m);
        }
    }
    Ok(SvmModel {
        c,
        kernel,
        machines,
        n_features: train.n_features(),
    })
}

impl SvmModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Pairwise vote. A machine output of exactly 0 votes for the worse class.
    pub fn predict_one(&self, x: &[f64]) -> LabelClass {
        let mut votes = [0usize; 3];
        for m in &self.machines {
            let winner = if m.decision(&self.kernel, x) >= 0.0 {
                m.positive
            } else {
                m.negative
            };
            votes[winner.index()] += 1;
        }
        LabelClass::majority(&votes)
    }
}

pub fn svm_predict(model: &SvmModel, x: &[f64]) -> LabelClass {
    model.predict_one(x)
}
