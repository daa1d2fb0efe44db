use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::table::{AssessmentMeta, GradebookTable, StudentRecord};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Id,
    Assessment,
    FinalGrade,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    /// Header name in the CSV.
    pub name: String,
    pub role: ColumnRole,
    /// Points the raw cell is out of. Defaults to 100 (already a percent).
    #[serde(default = "default_max_points")]
    pub max_points: f64,
    #[serde(default)]
    pub chronology_index: Option<u32>,
    #[serde(default)]
    pub available_by_midpoint: bool,
}

fn default_max_points() -> f64 {
    100.0
}

/// Column mapping for a gradebook CSV. Columns not listed are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn from_json_file(path: &Path) -> Result<Schema> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    fn single(&self, role: ColumnRole) -> Result<&ColumnSpec> {
        let mut it = self.columns.iter().filter(|c| c.role == role);
        match (it.next(), it.next()) {
            (Some(c), None) => Ok(c),
            (None, _) => Err(Error::config(format!("schema has no {role:?} column"))),
            (Some(_), Some(_)) => Err(Error::config(format!(
                "schema has more than one {role:?} column"
            ))),
        }
    }
}

pub fn ingest_csv(path: &Path, schema: &Schema) -> Result<GradebookTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(file, schema)
}

/// Reads a gradebook CSV (UTF-8, header row). Marks are converted to percent
/// of `max_points`; empty cells stay missing.
pub fn ingest_reader<R: Read>(reader: R, schema: &Schema) -> Result<GradebookTable> {
    let id_col = schema.single(ColumnRole::Id)?;
    let final_col = schema.single(ColumnRole::FinalGrade)?;
    let assessment_cols: Vec<&ColumnSpec> = schema
        .columns
        .iter()
        .filter(|c| c.role == ColumnRole::Assessment)
        .collect();

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let position = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(format!("CSV has no column `{name}`")))
    };

    let id_pos = position(&id_col.name)?;
    let final_pos = position(&final_col.name)?;
    let mut assessments = Vec::with_capacity(assessment_cols.len());
    let mut mark_pos = Vec::with_capacity(assessment_cols.len());
    for c in &assessment_cols {
        let chronology_index = c.chronology_index.ok_or_else(|| {
            Error::config(format!("assessment `{}` lacks chronology_index", c.name))
        })?;
        mark_pos.push(position(&c.name)?);
        assessments.push(AssessmentMeta {
            name: c.name.clone(),
            max_points: c.max_points,
            chronology_index,
            available_by_midpoint: c.available_by_midpoint,
        });
    }
    if !(final_col.max_points.is_finite() && final_col.max_points > 0.0) {
        return Err(Error::config(
            "final grade column needs positive max_points",
        ));
    }

    let mut students = Vec::new();
    let mut ids = HashSet::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |pos: usize| record.get(pos).unwrap_or("");

        let student_id = cell(id_pos).to_string();
        if student_id.is_empty() {
            return Err(Error::validation(format!("line {line}: empty student id")));
        }
        if !ids.insert(student_id.clone()) {
            return Err(Error::validation(format!(
                "duplicate student_id `{student_id}` at line {line}"
            )));
        }

        let mut marks = Vec::with_capacity(mark_pos.len());
        for (meta, &pos) in assessments.iter().zip(&mark_pos) {
            let mark = match parse_cell(cell(pos), line, &meta.name)? {
                None => None,
                Some(raw) => {
                    check_range(raw, meta.max_points, &student_id, &meta.name)?;
                    Some(raw * (100.0 / meta.max_points))
                }
            };
            marks.push(mark);
        }

        let raw_final = parse_cell(cell(final_pos), line, &final_col.name)?.ok_or_else(|| {
            Error::validation(format!(
                "student `{student_id}` has no value in `{}`",
                final_col.name
            ))
        })?;
        check_range(
            raw_final,
            final_col.max_points,
            &student_id,
            &final_col.name,
        )?;

        students.push(StudentRecord {
            student_id,
            marks,
            final_grade: raw_final * (100.0 / final_col.max_points),
        });
    }
    GradebookTable::new(assessments, students)
}

fn parse_cell(text: &str, line: u64, column: &str) -> Result<Option<f64>> {
    if text.is_empty() {
        return Ok(None);
    }
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            line,
            message: format!("column `{column}`: `{text}` is not a number"),
        }),
    }
}

fn check_range(v: f64, max_points: f64, student: &str, column: &str) -> Result<()> {
    if (0.0..=max_points).contains(&v) {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "student `{student}`, column `{column}`: {v} outside [0, {max_points}]"
        )))
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
