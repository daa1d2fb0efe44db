//! Confusion matrices, accuracy/precision/recall/F-score, and reports.

mod report;

pub use report::{
    comparison_json, comparison_table, evaluate, Classifier, ComparisonRow, EvaluationReport,
    ReportFlags,
};

use serde::{Deserialize, Serialize};

use crate::data::LabelClass;
use crate::error::{Error, Result};

/// Counts indexed `[true][predicted]` in class order G, F, W.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 3]; 3],
}

/// One-vs-rest tallies for a single class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BinaryCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..3).map(|i| self.counts[i][i]).sum()
    }

    /// Number of samples whose true class is `c`.
    pub fn support(&self, c: LabelClass) -> u64 {
        self.counts[c.index()].iter().sum()
    }

    pub fn one_vs_rest(&self, c: LabelClass) -> BinaryCounts {
        let i = c.index();
        let tp = self.counts[i][i];
        let col: u64 = (0..3).map(|r| self.counts[r][i]).sum();
        let row: u64 = self.counts[i].iter().sum();
        let fp = col - tp;
        let fn_ = row - tp;
        BinaryCounts {
            tp,
            fp,
            fn_,
            tn: self.total() - tp - fp - fn_,
        }
    }
}

pub fn confusion(true_labels: &[LabelClass], predicted: &[LabelClass]) -> Result<ConfusionMatrix> {
    if true_labels.len() != predicted.len() {
        return Err(Error::shape(format!(
            "{} true labels but {} predictions",
            true_labels.len(),
            predicted.len()
        )));
    }
    if true_labels.is_empty() {
        return Err(Error::shape(
            "cannot build a confusion matrix from zero samples",
        ));
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in true_labels.iter().zip(predicted) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerClassMetrics {
    pub class: LabelClass,
    pub support: u64,
    #[serde(flatten)]
    pub values: ClassMetrics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub accuracy: f64,
    pub per_class: Vec<PerClassMetrics>,
    /// Unweighted mean over classes that occur in the true labels.
    pub macro_avg: ClassMetrics,
    /// Mean weighted by true-class support.
    pub weighted_avg: ClassMetrics,
}

impl MetricsRecord {
    pub fn class(&self, c: LabelClass) -> &ClassMetrics {
        &self.per_class[c.index()].values
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Scores a confusion matrix. Any 0/0 ratio is 0. An empty matrix yields
/// all zeros.
pub fn metrics(cm: &ConfusionMatrix) -> MetricsRecord {
    let total = cm.total();
    let per_class: Vec<PerClassMetrics> = LabelClass::ALL
        .into_iter()
        .map(|c| {
            let b = cm.one_vs_rest(c);
            let precision = ratio(b.tp, b.tp + b.fp);
            let recall = ratio(b.tp, b.tp + b.fn_);
            PerClassMetrics {
                class: c,
                support: cm.support(c),
                values: ClassMetrics {
                    precision,
                    recall,
                    f_score: f_score(precision, recall),
                },
            }
        })
        .collect();

    let present: Vec<&PerClassMetrics> = per_class.iter().filter(|m| m.support > 0).collect();
    let n_present = present.len().max(1) as f64;
    let macro_avg = ClassMetrics {
        precision: present.iter().map(|m| m.values.precision).sum::<f64>() / n_present,
        recall: present.iter().map(|m| m.values.recall).sum::<f64>() / n_present,
        f_score: present.iter().map(|m| m.values.f_score).sum::<f64>() / n_present,
    };
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        if total == 0 {
            0.0
        } else {
            per_class
                .iter()
                .map(|m| m.support as f64 * f(&m.values))
                .sum::<f64>()
                / total as f64
        }
    };
    let weighted_avg = ClassMetrics {
        precision: weighted(|m| m.precision),
        recall: weighted(|m| m.recall),
        f_score: weighted(|m| m.f_score),
    };
    MetricsRecord {
        accuracy: ratio(cm.trace(), total),
        per_class,
        macro_avg,
        weighted_avg,
    }
}
