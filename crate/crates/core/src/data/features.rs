use std::io::Write;

use super::label::{derive_label, LabelClass};
use super::table::GradebookTable;
use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Complete numeric design matrix with one label per row.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: Matrix,
    labels: Vec<LabelClass>,
    feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(rows: Matrix, labels: Vec<LabelClass>, feature_names: Vec<String>) -> Result<Self> {
        if rows.rows() != labels.len() {
            return Err(Error::shape(format!(
                "{} rows but {} labels",
                rows.rows(),
                labels.len()
            )));
        }
        if rows.cols() != feature_names.len() {
            return Err(Error::shape(format!(
                "{} columns but {} feature names",
                rows.cols(),
                feature_names.len()
            )));
        }
        Ok(FeatureMatrix {
            rows,
            labels,
            feature_names,
        })
    }

    /// Convenience constructor with generated names `x0, x1, ...`.
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<LabelClass>) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        let names = (0..m.cols()).map(|i| format!("x{i}")).collect();
        FeatureMatrix::new(m, labels, names)
    }

    pub fn features(&self) -> &Matrix {
        &self.rows
    }

    pub fn labels(&self) -> &[LabelClass] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn n_rows(&self) -> usize {
        self.rows.rows()
    }

    pub fn n_features(&self) -> usize {
        self.rows.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.rows.row(i)
    }

    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            rows: self.rows.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn with_features(&self, rows: Matrix) -> Result<FeatureMatrix> {
        FeatureMatrix::new(rows, self.labels.clone(), self.feature_names.clone())
    }

    pub fn class_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for l in &self.labels {
            counts[l.index()] += 1;
        }
        counts
    }

    /// Features plus a trailing `label` column.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let to_err = |e: csv::Error| Error::validation(format!("writing CSV: {e}"));
        let mut header = self.feature_names.clone();
        header.push("label".into());
        w.write_record(&header).map_err(to_err)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            rec.push(label.to_string());
            w.write_record(&rec).map_err(to_err)?;
        }
        w.flush()
            .map_err(|e| Error::validation(format!("writing CSV: {e}")))?;
        Ok(())
    }
}

/// Keeps the assessments available by the midpoint, in chronological order,
/// and labels each student from the final grade.
pub fn select_midpoint_features(table: &GradebookTable) -> Result<FeatureMatrix> {
    let mut chosen: Vec<(u32, usize)> = table
        .assessments()
        .iter()
        .enumerate()
        .filter(|(_, a)| a.available_by_midpoint)
        .map(|(i, a)| (a.chronology_index, i))
        .collect();
    if chosen.is_empty() {
        return Err(Error::config("no midpoint features selected"));
    }
    chosen.sort_unstable();

    let mut data = Vec::with_capacity(table.len() * chosen.len());
    let mut labels = Vec::with_capacity(table.len());
    for s in table.students() {
        for &(_, col) in &chosen {
            let mark = s.marks[col].ok_or_else(|| {
                Error::validation(format!(
                    "student `{}` has a missing mark in `{}`; impute first",
                    s.student_id,
                    table.assessments()[col].name
                ))
            })?;
            data.push(mark);
        }
        if s.final_grade.fract() != 0.0 {
            return Err(Error::validation(format!(
                "student `{}` has unrounded final grade {}; round first",
                s.student_id, s.final_grade
            )));
        }
        labels.push(derive_label(s.final_grade as i64)?);
    }
    let names = chosen
        .iter()
        .map(|&(_, col)| table.assessments()[col].name.clone())
        .collect();
    FeatureMatrix::new(
        Matrix::from_vec(table.len(), chosen.len(), data)?,
        labels,
        names,
    )
}
