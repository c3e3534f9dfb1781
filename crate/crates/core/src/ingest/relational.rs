use std::collections::HashSet;
use std::path::Path;

use super::{read_source, IngestError, RawFact};

/// CSV with a header row; the first column is the entity key and every
/// non-empty non-key cell is one fact.
pub fn ingest_relational(path: &Path) -> Result<Vec<RawFact>, IngestError> {
    let text = read_source(path)?;
    ingest_relational_str(&text, path)
}

pub(crate) fn ingest_relational_str(text: &str, path: &Path) -> Result<Vec<RawFact>, IngestError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.is_empty() {
        return Err(IngestError::invalid(path, "missing header row"));
    }
    let mut seen = HashSet::new();
    for h in headers.iter() {
        if !seen.insert(h) {
            return Err(IngestError::invalid(path, format!("duplicate header `{h}`")));
        }
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        let key = &record[0];
        if key.is_empty() {
            return Err(IngestError::invalid(path, format!("row {row}: empty key cell")));
        }
        for (name, cell) in headers.iter().zip(record.iter()).skip(1) {
            if !cell.is_empty() {
                out.push(RawFact::new(key, name, cell));
            }
        }
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> IngestError {
    let (line, message) = match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => (
            pos.as_ref().map_or(0, |p| p.line() as usize),
            format!("ragged row: expected {expected_len} fields, found {len}"),
        ),
        _ => (e.position().map_or(0, |p| p.line() as usize), e.to_string()),
    };
    IngestError::parse(path, line, 1, message)
}
