use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssessmentMeta {
    pub name: String,
    pub max_points: f64,
    pub chronology_index: u32,
    pub available_by_midpoint: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudentRecord {
    pub student_id: String,
    /// Percent of the assessment's max points; `None` when the cell was empty.
    pub marks: Vec<Option<f64>>,
    /// Final course grade in percent.
    pub final_grade: f64,
}

/// Per-student assessment marks plus the final grade.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradebookTable {
    assessments: Vec<AssessmentMeta>,
    students: Vec<StudentRecord>,
}

impl GradebookTable {
    pub fn new(assessments: Vec<AssessmentMeta>, students: Vec<StudentRecord>) -> Result<Self> {
        let mut seen = HashSet::new();
        for a in &assessments {
            if !seen.insert(a.chronology_index) {
                return Err(Error::config(format!(
                    "chronology_index {} used by more than one assessment",
                    a.chronology_index
                )));
            }
            if !(a.max_points.is_finite() && a.max_points > 0.0) {
                return Err(Error::config(format!(
                    "assessment `{}` needs positive max_points",
                    a.name
                )));
            }
        }
        if !assessments.iter().any(|a| a.available_by_midpoint) {
            return Err(Error::config(
                "no assessment is marked available_by_midpoint",
            ));
        }
        let mut ids = HashSet::new();
        for s in &students {
            if s.marks.len() != assessments.len() {
                return Err(Error::validation(format!(
                    "student `{}` has {} marks for {} assessments",
                    s.student_id,
                    s.marks.len(),
                    assessments.len()
                )));
            }
            if !(0.0..=100.0).contains(&s.final_grade) {
                return Err(Error::validation(format!(
                    "student `{}` has final grade {} outside [0, 100]",
                    s.student_id, s.final_grade
                )));
            }
            if !ids.insert(s.student_id.as_str()) {
                return Err(Error::validation(format!(
                    "duplicate student_id `{}`",
                    s.student_id
                )));
            }
        }
        Ok(GradebookTable {
            assessments,
            students,
        })
    }

    pub fn assessments(&self) -> &[AssessmentMeta] {
        &self.assessments
    }

    pub fn students(&self) -> &[StudentRecord] {
        &self.students
    }

    pub fn len(&self) -> usize {
        self.students.len()
    }

    pub fn is_empty(&self) -> bool {
        self.students.is_empty()
    }

    /// Applies `f` to every student, keeping assessments. The structural
    /// invariants are preserved by the callers in this crate.
    pub(crate) fn map_students(&self, f: impl Fn(&StudentRecord) -> StudentRecord) -> Self {
        GradebookTable {
            assessments: self.assessments.clone(),
            students: self.students.iter().map(f).collect(),
        }
    }
}
