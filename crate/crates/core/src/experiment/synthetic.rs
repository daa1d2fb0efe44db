use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{
    largest_remainder, AssessmentMeta, ColumnRole, ColumnSpec, GradebookTable, LabelClass, Schema,
    StudentRecord,
};
use crate::error::{Error, Result};
use crate::numeric::RngStream;

/// Mark distribution for one class: a normal per assessment, clipped to
/// [0, 100]. `means` holds one value per assessment, or a single value
/// shared by all of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassProfile {
    pub means: Vec<f64>,
    pub spread: f64,
}

impl ClassProfile {
    fn mean(&self, j: usize) -> f64 {
        if self.means.len() == 1 {
            self.means[0]
        } else {
            self.means[j]
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_students: usize,
    /// Proportions of G, F and W.
    pub class_mix: [f64; 3],
    pub n_assessments: usize,
    /// The first `midpoint_count` assessments are available at the midpoint.
    pub midpoint_count: usize,
    /// Profiles for G, F and W.
    pub profiles: [ClassProfile; 3],
    pub noise_std: f64,
    pub seed: u64,
}

const GRADE_BANDS: [(f64, f64); 3] = [(70.0, 100.0), (51.0, 69.0), (0.0, 50.0)];

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_students == 0 {
            return Err(Error::config("n_students must be positive"));
        }
        if self.class_mix.iter().any(|p| !(0.0..=1.0).contains(p))
            || (self.class_mix.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err(Error::config(format!(
                "class_mix {:?} must be proportions summing to 1",
                self.class_mix
            )));
        }
        if self.n_assessments == 0
            || self.midpoint_count == 0
            || self.midpoint_count > self.n_assessments
        {
            return Err(Error::config(format!(
                "need 1 <= midpoint_count ({}) <= n_assessments ({})",
                self.midpoint_count, self.n_assessments
            )));
        }
        for (class, p) in LabelClass::ALL.iter().zip(&self.profiles) {
            if p.means.len() != 1 && p.means.len() != self.n_assessments {
                return Err(Error::config(format!(
                    "profile {class} has {} means for {} assessments",
                    p.means.len(),
                    self.n_assessments
                )));
            }
            if p.means.iter().any(|m| !m.is_finite()) || !(p.spread.is_finite() && p.spread >= 0.0)
            {
                return Err(Error::config(format!(
                    "profile {class} has an invalid mean or spread"
                )));
            }
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(Error::config("noise_std must be non-negative"));
        }
        Ok(())
    }

    /// Students per class: largest-remainder apportionment of `n_students`.
    pub fn class_counts(&self) -> Result<[usize; 3]> {
        self.validate()?;
        let c = largest_remainder(&self.class_mix, self.n_students);
        for (i, class) in LabelClass::ALL.iter().enumerate() {
            if self.class_mix[i] > 0.0 && c[i] == 0 {
                return Err(Error::domain(format!(
                    "class {class} rounds to 0 of {} students",
                    self.n_students
                )));
            }
        }
        Ok([c[0], c[1], c[2]])
    }

    fn assessment_name(j: usize) -> String {
        format!("A{:02}", j + 1)
    }

    /// Schema describing the CSV written by [`write_gradebook_csv`].
    pub fn schema(&self) -> Schema {
        let mut columns = vec![ColumnSpec {
            name: "student_id".into(),
            role: ColumnRole::Id,
            max_points: 100.0,
            chronology_index: None,
            available_by_midpoint: false,
        }];
        for j in 0..self.n_assessments {
            columns.push(ColumnSpec {
                name: Self::assessment_name(j),
                role: ColumnRole::Assessment,
                max_points: 100.0,
                chronology_index: Some(j as u32),
                available_by_midpoint: j < self.midpoint_count,
            });
        }
        columns.push(ColumnSpec {
            name: "final_grade".into(),
            role: ColumnRole::FinalGrade,
            max_points: 100.0,
            chronology_index: None,
            available_by_midpoint: false,
        });
        Schema { columns }
    }
}

/// Draws a gradebook. Each student's marks come from their class profile.
/// The final grade is the unweighted mean of all marks plus
/// `N(0, noise_std)`, then clamped into the class's grade band
/// (G 70-100, F 51-69, W 0-50), so derived labels reproduce the class counts
/// exactly. Student order is shuffled.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<GradebookTable> {
    let counts = spec.class_counts()?;
    let root = RngStream::new(spec.seed);
    let mut classes: Vec<usize> = (0..3)
        .flat_map(|c| std::iter::repeat_n(c, counts[c]))
        .collect();
    root.derive(0).shuffle(&mut classes);

    let mut rng = root.derive(1);
    let students = classes
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let profile = &spec.profiles[c];
            let marks: Vec<f64> = (0..spec.n_assessments)
                .map(|j| (profile.mean(j) + profile.spread * rng.normal()).clamp(0.0, 100.0))
                .collect();
            let mean = marks.iter().sum::<f64>() / marks.len() as f64;
            let (lo, hi) = GRADE_BANDS[c];
            let final_grade = (mean + spec.noise_std * rng.normal()).clamp(lo, hi);
            StudentRecord {
                student_id: format!("S{:04}", i + 1),
                marks: marks.into_iter().map(Some).collect(),
                final_grade,
            }
        })
        .collect();

    let assessments = (0..spec.n_assessments)
        .map(|j| AssessmentMeta {
            name: SyntheticSpec::assessment_name(j),
            max_points: 100.0,
            chronology_index: j as u32,
            available_by_midpoint: j < spec.midpoint_count,
        })
        .collect();
    GradebookTable::new(assessments, students)
}

/// Writes `student_id, <assessments...>, final_grade` with empty cells for
/// missing marks. Assessment columns follow table order.
pub fn write_gradebook_csv<W: Write>(table: &GradebookTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::validation(format!("writing CSV: {e}"));
    let mut header = vec!["student_id".to_string()];
    header.extend(table.assessments().iter().map(|a| a.name.clone()));
    header.push("final_grade".into());
    w.write_record(&header).map_err(csv_err)?;
    for s in table.students() {
        let mut row = vec![s.student_id.clone()];
        row.extend(
            s.marks
                .iter()
                .map(|m| m.map_or(String::new(), |v| v.to_string())),
        );
        row.push(s.final_grade.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::validation(format!("writing CSV: {e}")))?;
    Ok(())
}
