//! Tabular data model and ingestion.
//!
//! A [`Table`] is an ordered list of rows over a fixed, named schema. Row order
//! is significant: it is preserved by every loader and is exactly what the
//! shuffle morphism perturbs.

use std::collections::HashSet;
use std::fmt;

use serde::{Serialize, Serializer};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DataError {
    #[error("input is not valid UTF-8")]
    InvalidUtf8,

    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("duplicate column name '{0}'")]
    DuplicateColumn(String),

    #[error("empty column name at position {0}")]
    EmptyColumnName(usize),

    #[error("missing header row")]
    MissingHeader,

    #[error("row index {index} out of range for table with {rows} rows")]
    RowOutOfRange { index: usize, rows: usize },

    #[error("unknown field '{field}' (available: {})", available.join(", "))]
    UnknownField {
        field: String,
        available: Vec<String>,
    },

    #[error("row {row}: arity {found} does not match {expected} columns")]
    Arity {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("csv: {0}")]
    Csv(String),

    #[error("json rows: {0}")]
    Json(String),
}

/// A single cell.
///
/// `Number` is always finite; constructors that could produce NaN or an
/// infinity produce `Null` instead.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Number(f64),
    Text(String),
    Bool(bool),
}

impl Value {
    /// Wraps a float, mapping non-finite values to `Null`.
    pub fn number(v: f64) -> Value {
        if v.is_finite() {
            Value::Number(v)
        } else {
            Value::Null
        }
    }

    pub fn text(s: impl Into<String>) -> Value {
        Value::Text(s.into())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Number(v) => Some(*v),
            _ => None,
        }
    }

    /// Text form used for category ordering and labels.
    pub fn label(&self) -> String {
        match self {
            Value::Null => NULL_LABEL.to_string(),
            Value::Number(v) => format!("{v}"),
            Value::Text(s) => s.clone(),
            Value::Bool(b) => b.to_string(),
        }
    }

    /// Total order used when rows or categories must be sorted: by label,
    /// then by variant so that `Text("1")` and `Number(1.0)` stay distinct.
    pub fn cmp_total(&self, other: &Value) -> std::cmp::Ordering {
        self.label()
            .cmp(&other.label())
            .then_with(|| self.rank().cmp(&other.rank()))
    }

    fn rank(&self) -> u8 {
        match self {
            Value::Null => 0,
            Value::Number(_) => 1,
            Value::Text(_) => 2,
            Value::Bool(_) => 3,
        }
    }
}

/// Label of the group formed by rows whose category cell is `Null`.
pub const NULL_LABEL: &str = "⟨null⟩";

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Eq for Value {}

impl std::hash::Hash for Value {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Value::Null => {}
            // -0.0 == 0.0 under PartialEq, so hash them alike.
            Value::Number(v) => (if *v == 0.0 { 0.0f64 } else { *v }).to_bits().hash(state),
            Value::Text(s) => s.hash(state),
            Value::Bool(b) => b.hash(state),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => s.serialize_none(),
            Value::Number(v) => s.serialize_f64(*v),
            Value::Text(t) => s.serialize_str(t),
            Value::Bool(b) => s.serialize_bool(*b),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Number,
    Text,
    Bool,
    Mixed,
}

impl ColumnType {
    /// Infers a column type from its non-null cells. A column with no
    /// non-null cells is typed `Number`.
    pub fn infer<'a>(cells: impl IntoIterator<Item = &'a Value>) -> ColumnType {
        let mut seen: Option<ColumnType> = None;
        for cell in cells {
            let t = match cell {
                Value::Null => continue,
                Value::Number(_) => ColumnType::Number,
                Value::Text(_) => ColumnType::Text,
                Value::Bool(_) => ColumnType::Bool,
            };
            seen = match seen {
                None => Some(t),
                Some(prev) if prev == t => Some(prev),
                Some(_) => return ColumnType::Mixed,
            };
        }
        seen.unwrap_or(ColumnType::Number)
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnType::Number => "number",
            ColumnType::Text => "text",
            ColumnType::Bool => "bool",
            ColumnType::Mixed => "mixed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Column {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: ColumnType,
}

/// Ordered rows of typed cells. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<Column>,
    rows: Vec<Vec<Value>>,
}

impl Table {
    /// Builds a table, inferring column types from the data.
    pub fn new(names: Vec<String>, rows: Vec<Vec<Value>>) -> Result<Table, DataError> {
        check_names(&names)?;
        for (i, row) in rows.iter().enumerate() {
            if row.len() != names.len() {
                return Err(DataError::Arity {
                    row: i,
                    expected: names.len(),
                    found: row.len(),
                });
            }
        }
        let columns = names
            .into_iter()
            .enumerate()
            .map(|(c, name)| Column {
                ty: ColumnType::infer(rows.iter().map(|r| &r[c])),
                name,
            })
            .collect();
        Ok(Table { columns, rows })
    }

    /// Same schema, new rows. Column types are kept from `self` so that
    /// morphisms never alter the schema.
    pub(crate) fn with_rows(&self, rows: Vec<Vec<Value>>) -> Table {
        debug_assert!(rows.iter().all(|r| r.len() == self.columns.len()));
        Table {
            columns: self.columns.clone(),
            rows,
        }
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, field: &str) -> Result<usize, DataError> {
        self.columns
            .iter()
            .position(|c| c.name == field)
            .ok_or_else(|| DataError::UnknownField {
                field: field.to_string(),
                available: self.column_names(),
            })
    }

    /// Multiset row selection: rows appear in the order of `indices`, and
    /// repeated indices yield repeated rows.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Table, DataError> {
        let mut rows = Vec::with_capacity(indices.len());
        for &i in indices {
            let row = self.rows.get(i).ok_or(DataError::RowOutOfRange {
                index: i,
                rows: self.rows.len(),
            })?;
            rows.push(row.clone());
        }
        Ok(self.with_rows(rows))
    }

    /// Values of `field` in row order.
    pub fn column_values(&self, field: &str) -> Result<Vec<Value>, DataError> {
        let c = self.column_index(field)?;
        Ok(self.rows.iter().map(|r| r[c].clone()).collect())
    }

    /// Serializes to CSV with a header row. Nulls become empty cells and
    /// numbers use the shortest round-tripping decimal form.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        // Writing into a Vec cannot fail.
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .expect("in-memory csv write");
        for row in &self.rows {
            w.write_record(row.iter().map(|v| match v {
                Value::Null => String::new(),
                other => other.label(),
            }))
            .expect("in-memory csv write");
        }
        let bytes = w.into_inner().expect("in-memory csv flush");
        String::from_utf8(bytes).expect("csv output is utf-8")
    }
}

fn check_names(names: &[String]) -> Result<(), DataError> {
    let mut seen = HashSet::new();
    for (i, n) in names.iter().enumerate() {
        if n.is_empty() {
            return Err(DataError::EmptyColumnName(i));
        }
        if !seen.insert(n.as_str()) {
            return Err(DataError::DuplicateColumn(n.clone()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    /// Trim ASCII whitespace around unquoted cells before typing them.
    pub trim: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            delimiter: b',',
            trim: false,
        }
    }
}

/// Parses CSV bytes (RFC 4180 quoting, header row required).
///
/// Numeric-looking cells become `Number`, empty cells `Null`, anything else
/// `Text`. No locale handling: `1,5` is text, not one and a half.
pub fn load_csv(bytes: &[u8], options: &CsvOptions) -> Result<Table, DataError> {
    std::str::from_utf8(bytes).map_err(|_| DataError::InvalidUtf8)?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .trim(if options.trim {
            csv::Trim::All
        } else {
            csv::Trim::None
        })
        .from_reader(bytes);

    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| DataError::Csv(e.to_string()))?,
        None => return Err(DataError::MissingHeader),
    };
    let names: Vec<String> = header.iter().map(str::to_string).collect();
    check_names(&names)?;

    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        if record.len() != names.len() {
            return Err(DataError::RaggedRow {
                line: record.position().map(|p| p.line()).unwrap_or(0),
                expected: names.len(),
                found: record.len(),
            });
        }
        rows.push(record.iter().map(parse_cell).collect());
    }
    Table::new(names, rows)
}

fn parse_cell(cell: &str) -> Value {
    if cell.is_empty() {
        Value::Null
    } else if is_numeric_literal(cell) {
        // Overflowing literals such as 1e999 parse to infinity and become Null.
        cell.parse::<f64>()
            .map(Value::number)
            .unwrap_or(Value::Null)
    } else {
        Value::Text(cell.to_string())
    }
}

/// `[+-]? (digits [. digits?] | . digits) ([eE] [+-]? digits)?`
fn is_numeric_literal(s: &str) -> bool {
    let b = s.as_bytes();
    let mut i = 0;
    if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
        i += 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    let mut mantissa_digits = i - int_start;
    if i < b.len() && b[i] == b'.' {
        i += 1;
        let frac_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        mantissa_digits += i - frac_start;
    }
    if mantissa_digits == 0 {
        return false;
    }
    if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
        i += 1;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let exp_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == exp_start {
            return false;
        }
    }
    i == b.len()
}

/// Parses the JSON row format: a top-level array of flat objects. The union
/// of keys, in first-seen order, defines the columns; absent keys are Null.
pub fn load_json_rows(bytes: &[u8]) -> Result<Table, DataError> {
    let text = std::str::from_utf8(bytes).map_err(|_| DataError::InvalidUtf8)?;
    let doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DataError::Json(e.to_string()))?;
    let items = doc
        .as_array()
        .ok_or_else(|| DataError::Json("top level must be an array of objects".into()))?;

    let mut names: Vec<String> = Vec::new();
    let mut objects = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let obj = item
            .as_object()
            .ok_or_else(|| DataError::Json(format!("row {i} is not an object")))?;
        for key in obj.keys() {
            if !names.iter().any(|n| n == key) {
                names.push(key.clone());
            }
        }
        objects.push(obj);
    }

    let mut rows = Vec::with_capacity(objects.len());
    for (i, obj) in objects.iter().enumerate() {
        let mut row = Vec::with_capacity(names.len());
        for name in &names {
            let cell = match obj.get(name) {
                None | Some(serde_json::Value::Null) => Value::Null,
                Some(serde_json::Value::Bool(b)) => Value::Bool(*b),
                Some(serde_json::Value::Number(n)) => {
                    n.as_f64().map(Value::number).unwrap_or(Value::Null)
                }
                Some(serde_json::Value::String(s)) => Value::Text(s.clone()),
                Some(_) => {
                    return Err(DataError::Json(format!(
                        "row {i}, key '{name}': nested values are not supported"
                    )))
                }
            };
            row.push(cell);
        }
        rows.push(row);
    }
    Table::new(names, rows)
}

/// Loads either format, choosing JSON when the first non-blank byte is `[`.
pub fn load_auto(bytes: &[u8]) -> Result<Table, DataError> {
    match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'[') => load_json_rows(bytes),
        _ => load_csv(bytes, &CsvOptions::default()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv(s: &str) -> Result<Table, DataError> {
        load_csv(s.as_bytes(), &CsvOptions::default())
    }

    #[test]
    fn minimal_parse() {
        let t = csv("cat,val\nX,1\nY,2").unwrap();
        assert_eq!(t.row_count(), 2);
        assert_eq!(
            t.columns(),
            &[
                Column {
                    name: "cat".into(),
                    ty: ColumnType::Text
                },
                Column {
                    name: "val".into(),
                    ty: ColumnType::Number
                },
            ]
        );
        assert_eq!(t.rows()[0], vec![Value::text("X"), Value::Number(1.0)]);
    }

    #[test]
    fn header_only() {
        let t = csv("cat,val\n").unwrap();
        assert_eq!(t.row_count(), 0);
        assert_eq!(t.columns().len(), 2);
    }

    #[test]
    fn empty_cell_is_null() {
        let t = csv("a,b\n1,\n").unwrap();
        assert_eq!(t.row_count(), 1);
        assert_eq!(t.rows()[0][1], Value::Null);
    }

    #[test]
    fn ragged_row_reports_line() {
        let err = csv("a,b\n1,2\n3\n").unwrap_err();
        assert_eq!(
            err,
            DataError::RaggedRow {
                line: 3,
                expected: 2,
                found: 1
            }
        );
    }

    #[test]
    fn duplicate_header_rejected() {
        assert_eq!(
            csv("a,a\n1,2\n").unwrap_err(),
            DataError::DuplicateColumn("a".into())
        );
    }

    #[test]
    fn missing_header_rejected() {
        assert_eq!(csv("").unwrap_err(), DataError::MissingHeader);
    }

    #[test]
    fn numeric_literals() {
        for ok in ["1", "-1", "+2.5", "3.", ".5", "1e3", "1E-3", "-0.25e+2"] {
            assert!(is_numeric_literal(ok), "{ok}");
        }
        for bad in [
            "", "-", ".", "1e", "1,5", "0x10", "inf", "NaN", "1 ", " 1", "1.2.3", "e5",
        ] {
            assert!(!is_numeric_literal(bad), "{bad}");
        }
    }

    #[test]
    fn overflow_becomes_null() {
        let t = csv("v\n1e999\n").unwrap();
        assert_eq!(t.rows()[0][0], Value::Null);
    }

    #[test]
    fn mixed_column() {
        let t = csv("v\n1\nabc\n").unwrap();
        assert_eq!(t.columns()[0].ty, ColumnType::Mixed);
    }

    #[test]
    fn quoted_cells() {
        let t = csv("name,v\n\"Smith, J\",\"2\"\n").unwrap();
        assert_eq!(t.rows()[0][0], Value::text("Smith, J"));
        assert_eq!(t.rows()[0][1], Value::Number(2.0));
    }

    #[test]
    fn select_rows_multiset() {
        let t = csv("cat,val\nX,1\nY,2").unwrap();
        let s = t.select_rows(&[0, 0, 1]).unwrap();
        assert_eq!(
            s.rows(),
            &[
                t.rows()[0].clone(),
                t.rows()[0].clone(),
                t.rows()[1].clone()
            ]
        );
        let e = t.select_rows(&[]).unwrap();
        assert_eq!(e.row_count(), 0);
        assert_eq!(e.columns(), t.columns());
        assert_eq!(t.select_rows(&[0, 1]).unwrap(), t);
    }

    #[test]
    fn select_rows_out_of_range() {
        let t = csv("cat,val\nX,1\nY,2").unwrap();
        assert_eq!(
            t.select_rows(&[0, 5]).unwrap_err(),
            DataError::RowOutOfRange { index: 5, rows: 2 }
        );
    }

    #[test]
    fn column_values_cases() {
        let t = csv("cat,val\nX,1\nY,2").unwrap();
        assert_eq!(
            t.column_values("val").unwrap(),
            vec![Value::Number(1.0), Value::Number(2.0)]
        );
        let empty = csv("cat,val\n").unwrap();
        assert!(empty.column_values("val").unwrap().is_empty());
        let nulls = csv("a,b\n1,\n2,3\n").unwrap();
        assert_eq!(
            nulls.column_values("b").unwrap(),
            vec![Value::Null, Value::Number(3.0)]
        );
    }

    #[test]
    fn unknown_field_lists_columns() {
        let t = csv("cat,val\nX,1").unwrap();
        let err = t.column_values("vall").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("vall") && msg.contains("cat, val"), "{msg}");
    }

    #[test]
    fn json_rows_key_union() {
        let t = load_json_rows(br#"[{"a": 1, "b": "x"}, {"c": true}, {"a": null}]"#).unwrap();
        assert_eq!(t.column_names(), vec!["a", "b", "c"]);
        assert_eq!(
            t.rows()[1],
            vec![Value::Null, Value::Null, Value::Bool(true)]
        );
        assert_eq!(t.columns()[2].ty, ColumnType::Bool);
        assert!(load_json_rows(br#"{"a": 1}"#).is_err());
        assert!(load_json_rows(br#"[{"a": [1]}]"#).is_err());
    }

    #[test]
    fn csv_round_trip_quoting() {
        let t = csv("name,v\n\"a \"\"quoted\"\", b\",0.1\nplain,\n").unwrap();
        let back = csv(&t.to_csv()).unwrap();
        assert_eq!(back, t);
    }
}
