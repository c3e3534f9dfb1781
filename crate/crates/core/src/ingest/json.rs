use std::path::Path;

use serde_json::{Map, Value as Json};

use super::{read_source, IngestError, RawFact};

/// Ingests a JSON array of objects or newline-delimited JSON objects.
///
/// Nested objects flatten to dot-joined names, arrays of scalars become
/// multi-valued attributes, `null` leaves are skipped.
pub fn ingest_json(path: &Path, key_field: &str) -> Result<Vec<RawFact>, IngestError> {
    let text = read_source(path)?;
    ingest_json_str(&text, key_field, path)
}

pub(crate) fn ingest_json_str(text: &str, key_field: &str, path: &Path) -> Result<Vec<RawFact>, IngestError> {
    let docs = parse_documents(text, path)?;
    let mut out = Vec::new();
    for (index, doc) in docs.into_iter().enumerate() {
        let Json::Object(obj) = doc else {
            return Err(IngestError::invalid(path, format!("document {index} is not an object")));
        };
        let key = match obj.get(key_field) {
            Some(v) => scalar_lexical(v).filter(|k| !k.is_empty()),
            None => None,
        };
        let Some(key) = key else {
            return Err(IngestError::invalid(
                path,
                format!("object {index} is missing a scalar key field `{key_field}`"),
            ));
        };
        flatten_object(&obj, None, &key, &mut out)
            .map_err(|m| IngestError::invalid(path, format!("object {index}: {m}")))?;
    }
    Ok(out)
}

fn parse_documents(text: &str, path: &Path) -> Result<Vec<Json>, IngestError> {
    let to_err = |e: serde_json::Error| IngestError::parse(path, e.line(), e.column(), e.to_string());
    if text.trim_start().starts_with('[') {
        match serde_json::from_str::<Json>(text).map_err(to_err)? {
            Json::Array(items) => Ok(items),
            _ => unreachable!("text starts with `[`"),
        }
    } else {
        serde_json::Deserializer::from_str(text).into_iter::<Json>().map(|r| r.map_err(to_err)).collect()
    }
}

fn scalar_lexical(v: &Json) -> Option<String> {
    match v {
        Json::String(s) => Some(s.clone()),
        Json::Number(n) => Some(n.to_string()),
        Json::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn join(prefix: Option<&str>, name: &str) -> String {
    match prefix {
        Some(p) => format!("{p}.{name}"),
        None => name.to_owned(),
    }
}

fn flatten_object(
    obj: &Map<String, Json>,
    prefix: Option<&str>,
    key: &str,
    out: &mut Vec<RawFact>,
) -> Result<(), String> {
    for (name, value) in obj {
        let path = join(prefix, name);
        match value {
            Json::Null => {}
            Json::Object(inner) => flatten_object(inner, Some(&path), key, out)?,
            Json::Array(items) => {
                for item in items {
                    match item {
                        Json::Null => {}
                        Json::Array(_) | Json::Object(_) => {
                            return Err(format!(
                                "`{path}` holds a nested array or object; only arrays of scalars are supported"
                            ));
                        }
                        scalar => out.push(RawFact::new(key, path.clone(), scalar_lexical(scalar).unwrap())),
                    }
                }
            }
            scalar => out.push(RawFact::new(key, path, scalar_lexical(scalar).unwrap())),
        }
    }
    Ok(())
}
