//! Generic delimited-text / JSON table reading and canonical writing.
//!
//! Every table has a fixed canonical column order. Readers accept the
//! columns in any order (optional ones may be absent); writers always emit
//! the canonical order, so `write(read(f))` is a fixed point.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_json::Value;

use super::IngestError;

/// A validation failure on one field of one row.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// One input row, addressed by column name. Missing columns read as blank.
pub struct Row<'a> {
    values: HashMap<&'a str, &'a str>,
}

impl<'a> Row<'a> {
    pub fn new(values: HashMap<&'a str, &'a str>) -> Self {
        Row { values }
    }

    pub fn get(&self, field: &str) -> &'a str {
        self.values.get(field).map(|v| v.trim()).unwrap_or("")
    }

    pub fn optional(&self, field: &str) -> Option<&'a str> {
        let v = self.get(field);
        (!v.is_empty()).then_some(v)
    }

    pub fn required(&self, field: &str) -> Result<&'a str, FieldError> {
        self.optional(field)
            .ok_or_else(|| FieldError::new(field, "value is required"))
    }

    pub fn parse<T>(&self, field: &str) -> Result<T, FieldError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let raw = self.required(field)?;
        raw.parse::<T>()
            .map_err(|e| FieldError::new(field, format!("cannot parse {raw:?}: {e}")))
    }

    pub fn parse_optional<T>(&self, field: &str) -> Result<Option<T>, FieldError>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        match self.optional(field) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| FieldError::new(field, format!("cannot parse {raw:?}: {e}"))),
        }
    }
}

/// A typed row of one input table.
pub trait Record: Sized {
    /// File stem, e.g. `claims` for `claims.csv`.
    const TABLE: &'static str;
    /// Canonical column order.
    const COLUMNS: &'static [&'static str];
    /// Columns that may be missing from a header.
    const OPTIONAL: &'static [&'static str] = &[];

    fn from_row(row: &Row<'_>) -> Result<Self, FieldError>;
    fn to_row(&self) -> Vec<String>;
}

/// Reads a table, picking JSON for `.json` files and delimited text otherwise.
pub fn read_records<T: Record>(path: &Path) -> Result<Vec<T>, IngestError> {
    let bytes = std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(IngestError::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        parse_json(path, &bytes)
    } else {
        parse_csv(path, &bytes)
    }
}

fn check_columns<T: Record>(path: &Path, header: &[&str]) -> Result<(), IngestError> {
    let mismatch = |detail: String| IngestError::SchemaMismatch {
        path: path.to_path_buf(),
        detail,
    };
    let mut seen = Vec::with_capacity(header.len());
    for name in header {
        if !T::COLUMNS.contains(name) {
            return Err(mismatch(format!(
                "unexpected column {name:?}; expected {:?}",
                T::COLUMNS
            )));
        }
        if seen.contains(name) {
            return Err(mismatch(format!("duplicate column {name:?}")));
        }
        seen.push(name);
    }
    for col in T::COLUMNS {
        if !T::OPTIONAL.contains(col) && !header.contains(col) {
            return Err(mismatch(format!("missing column {col:?}")));
        }
    }
    Ok(())
}

fn parse_csv<T: Record>(path: &Path, bytes: &[u8]) -> Result<Vec<T>, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| IngestError::SchemaMismatch {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?
        .clone();
    let names: Vec<&str> = header.iter().collect();
    check_columns::<T>(path, &names)?;

    let mut out = Vec::new();
    for (i, result) in reader.records().enumerate() {
        let row_index = i + 1;
        let record = result.map_err(|e| IngestError::MalformedRow {
            path: path.to_path_buf(),
            row: row_index,
            field: String::new(),
            message: e.to_string(),
        })?;
        let values = names.iter().copied().zip(record.iter()).collect();
        let parsed = T::from_row(&Row::new(values)).map_err(|e| IngestError::MalformedRow {
            path: path.to_path_buf(),
            row: row_index,
            field: e.field,
            message: e.message,
        })?;
        out.push(parsed);
    }
    Ok(out)
}

fn json_scalar(value: &Value) -> Option<String> {
    match value {
        Value::Null => Some(String::new()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(_) | Value::Object(_) => None,
    }
}

fn parse_json<T: Record>(path: &Path, bytes: &[u8]) -> Result<Vec<T>, IngestError> {
    let mismatch = |detail: String| IngestError::SchemaMismatch {
        path: path.to_path_buf(),
        detail,
    };
    let doc: Value =
        serde_json::from_slice(bytes).map_err(|e| mismatch(format!("invalid JSON: {e}")))?;
    let Value::Array(items) = doc else {
        return Err(mismatch("expected a top-level array of row objects".into()));
    };
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let row_index = i + 1;
        let Value::Object(map) = item else {
            return Err(IngestError::MalformedRow {
                path: path.to_path_buf(),
                row: row_index,
                field: String::new(),
                message: "row is not an object".into(),
            });
        };
        let keys: Vec<&str> = map.keys().map(String::as_str).collect();
        check_columns::<T>(path, &keys)?;
        let mut owned = Vec::with_capacity(map.len());
        for (k, v) in map {
            let s = json_scalar(v).ok_or_else(|| IngestError::MalformedRow {
                path: path.to_path_buf(),
                row: row_index,
                field: k.clone(),
                message: "nested values are not allowed".into(),
            })?;
            owned.push((k.as_str(), s));
        }
        let values = owned.iter().map(|(k, v)| (*k, v.as_str())).collect();
        let parsed = T::from_row(&Row::new(values)).map_err(|e| IngestError::MalformedRow {
            path: path.to_path_buf(),
            row: row_index,
            field: e.field,
            message: e.message,
        })?;
        out.push(parsed);
    }
    Ok(out)
}

/// Writes records as canonical comma-delimited text with a header row.
pub fn write_records<T: Record, W: Write>(records: &[T], writer: W) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new().from_writer(writer);
    w.write_record(T::COLUMNS)?;
    for r in records {
        w.write_record(r.to_row())?;
    }
    w.flush()
}

pub fn to_canonical_csv<T: Record>(records: &[T]) -> String {
    let mut buf = Vec::new();
    write_records(records, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("records are UTF-8")
}

/// Locates `<table>.csv` or `<table>.json` in `dir`.
pub fn find_table(dir: &Path, table: &str) -> Option<PathBuf> {
    ["csv", "json"]
        .iter()
        .map(|ext| dir.join(format!("{table}.{ext}")))
        .find(|p| p.is_file())
}

/// Formats a float so that parsing it back yields the same value.
pub fn fmt_f64(value: f64) -> String {
    format!("{value}")
}

pub fn fmt_opt_f64(value: Option<f64>) -> String {
    value.map(fmt_f64).unwrap_or_default()
}
