use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{confusion, metrics, ConfusionMatrix, MetricsRecord};
use crate::baseline::BaselineModel;
use crate::data::{FeatureMatrix, LabelClass};
use crate::error::{Error, Result};
use crate::nn::{predict, TrainedNet};
use crate::numeric::Matrix;

/// Anything that maps a feature matrix to class labels.
pub trait Classifier {
    fn n_features(&self) -> usize;
    fn predict_labels(&self, x: &Matrix) -> Result<Vec<LabelClass>>;
}

impl Classifier for TrainedNet {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_labels(&self, x: &Matrix) -> Result<Vec<LabelClass>> {
        Ok(predict(self, x)?.0)
    }
}

impl Classifier for BaselineModel {
    fn n_features(&self) -> usize {
        BaselineModel::n_features(self)
    }

    fn predict_labels(&self, x: &Matrix) -> Result<Vec<LabelClass>> {
        self.predict(x)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportFlags {
    /// Set when some test rows are W and fewer than half of them are recalled.
    pub weak_recall_below_half: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub model_name: String,
    pub dataset_name: String,
    pub seed: u64,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsRecord,
    pub support: [u64; 3],
    pub predictions: Vec<LabelClass>,
    pub flags: ReportFlags,
}

impl EvaluationReport {
    pub fn from_predictions(
        model_name: &str,
        dataset_name: &str,
        seed: u64,
        truth: &[LabelClass],
        predictions: Vec<LabelClass>,
    ) -> Result<EvaluationReport> {
        let cm = confusion(truth, &predictions)?;
        let m = metrics(&cm);
        let support = LabelClass::ALL.map(|c| cm.support(c));
        let weak = LabelClass::W;
        let flags = ReportFlags {
            weak_recall_below_half: support[weak.index()] >= 1 && m.class(weak).recall < 0.5,
        };
        Ok(EvaluationReport {
            model_name: model_name.to_string(),
            dataset_name: dataset_name.to_string(),
            seed,
            confusion: cm,
            metrics: m,
            support,
            predictions,
            flags,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<EvaluationReport> {
        Ok(serde_json::from_str(s)?)
    }
}

pub fn evaluate(
    model: &dyn Classifier,
    test: &FeatureMatrix,
    model_name: &str,
    dataset_name: &str,
    seed: u64,
) -> Result<EvaluationReport> {
    if test.is_empty() {
        return Err(Error::domain("cannot evaluate on an empty test set"));
    }
    if model.n_features() != test.n_features() {
        return Err(Error::shape(format!(
            "{model_name} expects {} features, test data has {}",
            model.n_features(),
            test.n_features()
        )));
    }
    let predictions = model.predict_labels(test.features())?;
    EvaluationReport::from_predictions(model_name, dataset_name, seed, test.labels(), predictions)
}

/// Headline row of the comparison table (weighted averages).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub algorithm: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub weak_recall: f64,
    pub weak_recall_below_half: bool,
}

impl From<&EvaluationReport> for ComparisonRow {
    fn from(r: &EvaluationReport) -> Self {
        let w = &r.metrics.weighted_avg;
        ComparisonRow {
            algorithm: r.model_name.clone(),
            accuracy: r.metrics.accuracy,
            precision: w.precision,
            recall: w.recall,
            f_score: w.f_score,
            weak_recall: r.metrics.class(LabelClass::W).recall,
            weak_recall_below_half: r.flags.weak_recall_below_half,
        }
    }
}

pub fn comparison_json(reports: &[EvaluationReport]) -> Result<String> {
    let rows: Vec<ComparisonRow> = reports.iter().map(ComparisonRow::from).collect();
    Ok(serde_json::to_string_pretty(&rows)?)
}

/// Aligned plain-text table: Algorithm | Accuracy | Precision | Recall | F-score.
pub fn comparison_table(reports: &[EvaluationReport]) -> String {
    let header = ["Algorithm", "Accuracy", "Precision", "Recall", "F-score"];
    let rows: Vec<[String; 5]> = reports
        .iter()
        .map(|r| {
            let c = ComparisonRow::from(r);
            [
                c.algorithm,
                format!("{:.4}", c.accuracy),
                format!("{:.4}", c.precision),
                format!("{:.4}", c.recall),
                format!("{:.4}", c.f_score),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, cells: [&str; 5]| {
        let parts: Vec<String> = cells
            .iter()
            .zip(widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "| {} |", parts.join(" | "));
    };
    line(&mut out, header);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    let _ = writeln!(out, "|-{}-|", rule.join("-|-"));
    for row in &rows {
        line(&mut out, [&row[0], &row[1], &row[2], &row[3], &row[4]]);
    }
    out
}
