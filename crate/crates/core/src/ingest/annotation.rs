//! Step-annotation tables: UTF-8 CSV with header
//! `start_s,end_s,description,error_label`.
//!
//! This fixed-column table is the pipeline-facing format; adapters for the
//! upstream datasets' native schemas are thin pre-converters outside this
//! crate.

use super::{ErrorLabel, IngestError, StepAnnotation};
use crate::time::{format_seconds, round_ms, TimeSpan};

/// Parses a step-annotation CSV. Rows come back sorted by start time; an
/// empty `error_label` cell means the step is normal.
pub fn parse_step_annotation_file(content: &[u8]) -> Result<Vec<StepAnnotation>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(content);

    let header_ok = reader
        .headers()
        .map(|h| {
            let cols: Vec<&str> = h.iter().collect();
            cols.len() >= 3 && cols[0] == "start_s" && cols[1] == "end_s" && cols[2] == "description"
        })
        .unwrap_or(false);
    if !header_ok {
        return Err(IngestError::MalformedRow {
            row: 1,
            reason: "expected header start_s,end_s,description,error_label".into(),
        });
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2; // 1-based file line, after the header
        let record = record.map_err(|e| IngestError::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        let field = |idx: usize| record.get(idx).unwrap_or("").trim();

        let start: f64 = field(0).parse().map_err(|_| IngestError::MalformedRow {
            row,
            reason: format!("bad start_s {:?}", field(0)),
        })?;
        let end: f64 = field(1).parse().map_err(|_| IngestError::MalformedRow {
            row,
            reason: format!("bad end_s {:?}", field(1)),
        })?;
        let span = TimeSpan::new(round_ms(start), round_ms(end)).map_err(|e| {
            IngestError::MalformedRow {
                row,
                reason: e.to_string(),
            }
        })?;

        let description = field(2).to_string();
        if description.is_empty() {
            return Err(IngestError::MalformedRow {
                row,
                reason: "empty description".into(),
            });
        }

        let error_label = match field(3) {
            "" => None,
            raw => Some(ErrorLabel::parse(raw).ok_or_else(|| IngestError::UnknownErrorLabel {
                row,
                label: raw.to_string(),
            })?),
        };

        rows.push(StepAnnotation {
            description,
            span,
            error_label,
        });
    }

    rows.sort_by(|a, b| a.span.start_s.partial_cmp(&b.span.start_s).unwrap());
    Ok(rows)
}

pub fn annotations_to_csv(annotations: &[StepAnnotation]) -> String {
    let mut out = String::from("start_s,end_s,description,error_label\n");
    for a in annotations {
        let label = a.error_label.map(|l| l.as_str()).unwrap_or("");
        out.push_str(&format!(
            "{},{},{},{}\n",
            format_seconds(a.span.start_s),
            format_seconds(a.span.end_s),
            csv_escape(&a.description),
            label
        ));
    }
    out
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
