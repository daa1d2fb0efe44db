use super::table::{GradebookTable, StudentRecord};

/// Replaces every missing mark with 0.
pub fn impute_missing(table: &GradebookTable) -> GradebookTable {
    table.map_students(|s| StudentRecord {
        marks: s.marks.iter().map(|m| Some(m.unwrap_or(0.0))).collect(),
        ..s.clone()
    })
}

/// Rounds marks and final grades to the nearest integer, halves away from
/// zero.
pub fn round_grades(table: &GradebookTable) -> GradebookTable {
    table.map_students(|s| StudentRecord {
        marks: s.marks.iter().map(|m| m.map(f64::round)).collect(),
        final_grade: s.final_grade.round(),
        ..s.clone()
    })
}
