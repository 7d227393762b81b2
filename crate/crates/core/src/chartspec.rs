//! A small Vega-Lite-like chart grammar: three marks, three channels, six
//! aggregates. Parsing is strict (unknown keys are errors) and every error
//! names the JSON path it came from.

use std::fmt;

use serde::Serialize;
use serde_json::{json, Map, Value as Json};

use crate::data::{ColumnType, Table};

pub const DEFAULT_WIDTH: u32 = 400;
pub const DEFAULT_HEIGHT: u32 = 300;
const MAX_DIMENSION: u64 = 8192;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct SpecError {
    pub path: String,
    pub message: String,
}

impl SpecError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> SpecError {
        SpecError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MarkKind {
    Bar,
    Point,
    Line,
}

impl MarkKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MarkKind::Bar => "bar",
            MarkKind::Point => "point",
            MarkKind::Line => "line",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldType {
    Nominal,
    Quantitative,
}

impl FieldType {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldType::Nominal => "nominal",
            FieldType::Quantitative => "quantitative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    None,
    Sum,
    Mean,
    Count,
    Min,
    Max,
}

impl Aggregate {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregate::None => "none",
            Aggregate::Sum => "sum",
            Aggregate::Mean => "mean",
            Aggregate::Count => "count",
            Aggregate::Min => "min",
            Aggregate::Max => "max",
        }
    }

    fn parse(s: &str) -> Option<Aggregate> {
        Some(match s {
            "none" => Aggregate::None,
            "sum" => Aggregate::Sum,
            "mean" => Aggregate::Mean,
            "count" => Aggregate::Count,
            "min" => Aggregate::Min,
            "max" => Aggregate::Max,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SortOrder {
    ByCategoryAscending,
    ByValueDescending,
    None,
}

impl SortOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            SortOrder::ByCategoryAscending => "by-category-ascending",
            SortOrder::ByValueDescending => "by-value-descending",
            SortOrder::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    X,
    Y,
    Color,
}

impl Channel {
    pub fn as_str(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::Y => "y",
            Channel::Color => "color",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Encoding {
    pub field: String,
    pub field_type: FieldType,
    pub aggregate: Aggregate,
    /// Include zero in the quantitative domain. Meaningless for nominal axes
    /// and always `true` there.
    pub scale_zero: bool,
}

impl Encoding {
    pub fn nominal(field: &str) -> Encoding {
        Encoding {
            field: field.to_string(),
            field_type: FieldType::Nominal,
            aggregate: Aggregate::None,
            scale_zero: true,
        }
    }

    pub fn quantitative(field: &str) -> Encoding {
        Encoding {
            field: field.to_string(),
            field_type: FieldType::Quantitative,
            aggregate: Aggregate::None,
            scale_zero: true,
        }
    }

    pub fn with_aggregate(mut self, aggregate: Aggregate) -> Encoding {
        self.aggregate = aggregate;
        self
    }

    /// Whether this channel is drawn on a linear scale. Count over any field
    /// produces numbers, so it counts as quantitative.
    pub fn is_quantitative(&self) -> bool {
        self.field_type == FieldType::Quantitative || self.aggregate != Aggregate::None
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Encodings {
    pub x: Encoding,
    pub y: Encoding,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<Encoding>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChartSpec {
    pub mark: MarkKind,
    pub encoding: Encodings,
    pub width: u32,
    pub height: u32,
    pub opacity: f64,
    pub sort: SortOrder,
}

/// Which positional channel carries categories for aggregated charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Categories along x, values along y.
    Vertical,
    /// Categories along y, values along x.
    Horizontal,
}

impl ChartSpec {
    /// A bar chart with nominal `category` on x and `aggregate(value)` on y.
    pub fn bar(category: &str, value: &str, aggregate: Aggregate) -> ChartSpec {
        ChartSpec {
            mark: MarkKind::Bar,
            encoding: Encodings {
                x: Encoding::nominal(category),
                y: Encoding::quantitative(value).with_aggregate(aggregate),
                color: None,
            },
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            opacity: 1.0,
            sort: SortOrder::ByCategoryAscending,
        }
    }

    pub fn is_aggregated(&self) -> bool {
        self.encoding.x.aggregate != Aggregate::None || self.encoding.y.aggregate != Aggregate::None
    }

    pub fn is_aggregated_bar(&self) -> bool {
        self.mark == MarkKind::Bar && self.is_aggregated()
    }

    /// Orientation when one positional channel is nominal and the other
    /// quantitative; `None` for quantitative-by-quantitative charts.
    pub fn orientation(&self) -> Option<Orientation> {
        let (x, y) = (&self.encoding.x, &self.encoding.y);
        match (x.is_quantitative(), y.is_quantitative()) {
            (false, true) => Some(Orientation::Vertical),
            (true, false) => Some(Orientation::Horizontal),
            _ => None,
        }
    }

    /// (category encoding, value encoding) for charts with an orientation.
    pub fn category_and_value(&self) -> Option<(&Encoding, &Encoding)> {
        match self.orientation()? {
            Orientation::Vertical => Some((&self.encoding.x, &self.encoding.y)),
            Orientation::Horizontal => Some((&self.encoding.y, &self.encoding.x)),
        }
    }

    pub fn channels(&self) -> impl Iterator<Item = (Channel, &Encoding)> {
        [
            Some((Channel::X, &self.encoding.x)),
            Some((Channel::Y, &self.encoding.y)),
            self.encoding.color.as_ref().map(|c| (Channel::Color, c)),
        ]
        .into_iter()
        .flatten()
    }

    /// Wire-format JSON with every field explicit. Parses back to `self`.
    pub fn to_json(&self) -> Json {
        let mut enc = Map::new();
        for (ch, e) in self.channels() {
            let mut o = Map::new();
            o.insert("field".into(), json!(e.field));
            o.insert("type".into(), json!(e.field_type.as_str()));
            o.insert("aggregate".into(), json!(e.aggregate.as_str()));
            if e.is_quantitative() && ch != Channel::Color {
                o.insert("scale".into(), json!({ "zero": e.scale_zero }));
            }
            enc.insert(ch.as_str().into(), Json::Object(o));
        }
        json!({
            "mark": self.mark.as_str(),
            "encoding": enc,
            "width": self.width,
            "height": self.height,
            "opacity": self.opacity,
            "sort": self.sort.as_str(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("spec json")
    }
}

/// Parses the JSON wire format, filling defaults.
pub fn parse_spec(text: &str) -> Result<ChartSpec, SpecError> {
    let doc: Json = serde_json::from_str(text)
        .map_err(|e| SpecError::new("$", format!("invalid JSON: {e}")))?;
    parse_spec_value(&doc)
}

pub fn parse_spec_value(doc: &Json) -> Result<ChartSpec, SpecError> {
    let obj = doc
        .as_object()
        .ok_or_else(|| SpecError::new("$", "spec must be a JSON object"))?;
    reject_unknown(
        obj,
        "$",
        &["mark", "encoding", "width", "height", "opacity", "sort"],
    )?;

    let mark = match obj.get("mark") {
        None => return Err(SpecError::new("$.mark", "missing mark")),
        Some(Json::String(s)) => match s.as_str() {
            "bar" => MarkKind::Bar,
            "point" => MarkKind::Point,
            "line" => MarkKind::Line,
            other => return Err(SpecError::new("$.mark", format!("unknown mark '{other}'"))),
        },
        Some(_) => return Err(SpecError::new("$.mark", "mark must be a string")),
    };

    let enc = obj
        .get("encoding")
        .ok_or_else(|| SpecError::new("$.encoding", "missing encoding"))?
        .as_object()
        .ok_or_else(|| SpecError::new("$.encoding", "encoding must be an object"))?;
    reject_unknown(enc, "$.encoding", &["x", "y", "color"])?;
    let channel = |name: &str| -> Result<Option<Encoding>, SpecError> {
        enc.get(name)
            .map(|v| parse_encoding(v, &format!("$.encoding.{name}")))
            .transpose()
    };
    let x =
        channel("x")?.ok_or_else(|| SpecError::new("$.encoding", "missing required channel x"))?;
    let y =
        channel("y")?.ok_or_else(|| SpecError::new("$.encoding", "missing required channel y"))?;
    let color = channel("color")?;

    let width = parse_dimension(obj.get("width"), "$.width", DEFAULT_WIDTH)?;
    let height = parse_dimension(obj.get("height"), "$.height", DEFAULT_HEIGHT)?;

    let opacity = match obj.get("opacity") {
        None => 1.0,
        Some(v) => {
            let f = v
                .as_f64()
                .ok_or_else(|| SpecError::new("$.opacity", "opacity must be a number"))?;
            if !(f > 0.0 && f <= 1.0) {
                return Err(SpecError::new(
                    "$.opacity",
                    format!("opacity {f} outside (0, 1]"),
                ));
            }
            f
        }
    };

    let sort = match obj.get("sort") {
        None => SortOrder::ByCategoryAscending,
        Some(Json::String(s)) => match s.as_str() {
            "by-category-ascending" => SortOrder::ByCategoryAscending,
            "by-value-descending" => SortOrder::ByValueDescending,
            "none" => SortOrder::None,
            other => return Err(SpecError::new("$.sort", format!("unknown sort '{other}'"))),
        },
        Some(_) => return Err(SpecError::new("$.sort", "sort must be a string")),
    };

    let spec = ChartSpec {
        mark,
        encoding: Encodings { x, y, color },
        width,
        height,
        opacity,
        sort,
    };
    check_structure(&spec)?;
    Ok(spec)
}

fn reject_unknown(obj: &Map<String, Json>, path: &str, allowed: &[&str]) -> Result<(), SpecError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(SpecError::new(
            format!("{path}.{k}"),
            format!("unknown key '{k}'"),
        )),
        None => Ok(()),
    }
}

fn parse_dimension(v: Option<&Json>, path: &str, default: u32) -> Result<u32, SpecError> {
    match v {
        None => Ok(default),
        Some(v) => match v.as_u64() {
            Some(n) if (1..=MAX_DIMENSION).contains(&n) => Ok(n as u32),
            _ => Err(SpecError::new(
                path,
                format!("must be an integer in 1..={MAX_DIMENSION}"),
            )),
        },
    }
}

fn parse_encoding(v: &Json, path: &str) -> Result<Encoding, SpecError> {
    let obj = v
        .as_object()
        .ok_or_else(|| SpecError::new(path, "encoding must be an object"))?;
    reject_unknown(obj, path, &["field", "type", "aggregate", "scale"])?;

    let field = match obj.get("field") {
        Some(Json::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => {
            return Err(SpecError::new(
                format!("{path}.field"),
                "field must be a non-empty string",
            ))
        }
        None => return Err(SpecError::new(format!("{path}.field"), "missing field")),
    };
    let field_type = match obj.get("type").and_then(Json::as_str) {
        Some("nominal") => FieldType::Nominal,
        Some("quantitative") => FieldType::Quantitative,
        Some(other) => {
            return Err(SpecError::new(
                format!("{path}.type"),
                format!("unknown type '{other}'"),
            ))
        }
        None => return Err(SpecError::new(format!("{path}.type"), "missing type")),
    };
    let aggregate = match obj.get("aggregate") {
        None => Aggregate::None,
        Some(Json::String(s)) => Aggregate::parse(s).ok_or_else(|| {
            SpecError::new(
                format!("{path}.aggregate"),
                format!("unknown aggregate '{s}'"),
            )
        })?,
        Some(_) => {
            return Err(SpecError::new(
                format!("{path}.aggregate"),
                "aggregate must be a string",
            ))
        }
    };
    if aggregate != Aggregate::None
        && aggregate != Aggregate::Count
        && field_type != FieldType::Quantitative
    {
        return Err(SpecError::new(
            format!("{path}.aggregate"),
            format!(
                "aggregate '{}' requires a quantitative field",
                aggregate.as_str()
            ),
        ));
    }

    let mut enc = Encoding {
        field,
        field_type,
        aggregate,
        scale_zero: true,
    };
    if let Some(scale) = obj.get("scale") {
        let spath = format!("{path}.scale");
        let sobj = scale
            .as_object()
            .ok_or_else(|| SpecError::new(&spath, "scale must be an object"))?;
        reject_unknown(sobj, &spath, &["zero"])?;
        if !enc.is_quantitative() {
            return Err(SpecError::new(
                &spath,
                "scale applies to quantitative fields only",
            ));
        }
        if let Some(z) = sobj.get("zero") {
            enc.scale_zero = z
                .as_bool()
                .ok_or_else(|| SpecError::new(format!("{spath}.zero"), "zero must be a boolean"))?;
        }
    }
    Ok(enc)
}

/// Table-independent constraints between channels.
fn check_structure(spec: &ChartSpec) -> Result<(), SpecError> {
    if let Some(color) = &spec.encoding.color {
        if color.is_quantitative() {
            return Err(SpecError::new(
                "$.encoding.color",
                "color channel must be nominal without aggregate",
            ));
        }
    }

    if spec.mark == MarkKind::Bar && spec.orientation().is_none() {
        return Err(SpecError::new(
            "$.encoding",
            "bar mark requires exactly one nominal and one quantitative positional channel",
        ));
    }

    if spec.is_aggregated() {
        let Some((category, _)) = spec.category_and_value() else {
            return Err(SpecError::new(
                "$.encoding",
                "aggregated charts require one nominal positional channel to group by",
            ));
        };
        if let Some(color) = &spec.encoding.color {
            if color.field != category.field {
                return Err(SpecError::new(
                    "$.encoding.color.field",
                    format!(
                        "aggregated charts may only color by the grouping field '{}'",
                        category.field
                    ),
                ));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl ValidationIssue {
    fn error(path: String, message: String) -> ValidationIssue {
        ValidationIssue {
            severity: Severity::Error,
            path,
            message,
        }
    }

    fn warning(path: String, message: String) -> ValidationIssue {
        ValidationIssue {
            severity: Severity::Warning,
            path,
            message,
        }
    }
}

pub fn has_errors(issues: &[ValidationIssue]) -> bool {
    issues.iter().any(|i| i.severity == Severity::Error)
}

/// Checks a spec against a concrete table. Returns an empty list when every
/// encoded field exists with a compatible type.
pub fn validate_spec(spec: &ChartSpec, table: &Table) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    for (ch, enc) in spec.channels() {
        let path = format!("$.encoding.{ch}.field");
        let Some(column) = table.column(&enc.field) else {
            issues.push(ValidationIssue::error(
                path,
                format!(
                    "field '{}' not found in data (available: {})",
                    enc.field,
                    table.column_names().join(", ")
                ),
            ));
            continue;
        };
        let needs_numbers = enc.is_quantitative() && enc.aggregate != Aggregate::Count;
        if needs_numbers && column.ty != ColumnType::Number {
            let what = match enc.aggregate {
                Aggregate::None => "a quantitative encoding".to_string(),
                a => format!("aggregate '{}'", a.as_str()),
            };
            issues.push(ValidationIssue::error(
                path,
                format!(
                    "{what} requires a numeric column, but '{}' is {}",
                    enc.field, column.ty
                ),
            ));
        }
    }

    if spec.mark == MarkKind::Bar && !spec.is_aggregated() {
        issues.push(ValidationIssue::warning(
            "$.encoding".into(),
            "bar chart without an aggregate draws one bar per row; bars sharing a category overplot"
                .into(),
        ));
    }
    if spec.mark == MarkKind::Bar {
        if let Some((_, value)) = spec.category_and_value() {
            if !value.scale_zero {
                issues.push(ValidationIssue::warning(
                    "$.encoding".into(),
                    "bar chart with a non-zero baseline exaggerates differences (truncated axis)"
                        .into(),
                ));
            }
        }
    }
    issues
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{load_csv, CsvOptions};

    const MINIMAL: &str = r#"{"mark":"bar","encoding":{"x":{"field":"cat","type":"nominal"},"y":{"field":"val","type":"quantitative","aggregate":"mean"}}}"#;

    fn table(s: &str) -> Table {
        load_csv(s.as_bytes(), &CsvOptions::default()).unwrap()
    }

    #[test]
    fn minimal_spec_gets_defaults() {
        let s = parse_spec(MINIMAL).unwrap();
        assert_eq!(s.mark, MarkKind::Bar);
        assert_eq!(s.encoding.y.aggregate, Aggregate::Mean);
        assert!(s.encoding.y.scale_zero);
        assert_eq!((s.width, s.height), (DEFAULT_WIDTH, DEFAULT_HEIGHT));
        assert_eq!(s.opacity, 1.0);
        assert_eq!(s.sort, SortOrder::ByCategoryAscending);
        assert_eq!(s, ChartSpec::bar("cat", "val", Aggregate::Mean));
    }

    #[test]
    fn unknown_mark() {
        let err = parse_spec(r#"{"mark":"pie","encoding":{}}"#).unwrap_err();
        assert_eq!(err.path, "$.mark");
        assert!(err.to_string().contains("unknown mark 'pie'"));
    }

    #[test]
    fn missing_y() {
        let err =
            parse_spec(r#"{"mark":"point","encoding":{"x":{"field":"a","type":"quantitative"}}}"#)
                .unwrap_err();
        assert!(
            err.to_string().contains("missing required channel y"),
            "{err}"
        );
    }

    #[test]
    fn unknown_aggregate_and_bad_opacity() {
        let err = parse_spec(
            r#"{"mark":"bar","encoding":{"x":{"field":"c","type":"nominal"},"y":{"field":"v","type":"quantitative","aggregate":"median"}}}"#,
        )
        .unwrap_err();
        assert_eq!(err.path, "$.encoding.y.aggregate");

        for op in ["0", "1.5", "-0.2"] {
            let text = MINIMAL.replacen('{', &format!("{{\"opacity\":{op},"), 1);
            let err = parse_spec(&text).unwrap_err();
            assert_eq!(err.path, "$.opacity", "{op}");
        }
    }

    #[test]
    fn strict_keys() {
        let text = MINIMAL.replacen('{', "{\"title\":\"t\",", 1);
        assert_eq!(parse_spec(&text).unwrap_err().path, "$.title");
        let text = MINIMAL.replace(r#""type":"nominal""#, r#""type":"nominal","bin":true"#);
        assert_eq!(parse_spec(&text).unwrap_err().path, "$.encoding.x.bin");
    }

    #[test]
    fn key_order_irrelevant() {
        let reordered = r#"{"encoding":{"y":{"aggregate":"mean","type":"quantitative","field":"val"},"x":{"type":"nominal","field":"cat"}},"mark":"bar"}"#;
        assert_eq!(parse_spec(reordered).unwrap(), parse_spec(MINIMAL).unwrap());
    }

    #[test]
    fn structural_rules() {
        // mean over nominal
        assert!(parse_spec(
            r#"{"mark":"bar","encoding":{"x":{"field":"c","type":"nominal"},"y":{"field":"v","type":"nominal","aggregate":"mean"}}}"#
        )
        .is_err());
        // count over nominal is fine
        let s = parse_spec(
            r#"{"mark":"bar","encoding":{"x":{"field":"c","type":"nominal"},"y":{"field":"c","type":"nominal","aggregate":"count"}}}"#,
        )
        .unwrap();
        assert!(s.encoding.y.is_quantitative());
        // bar needs one nominal + one quantitative
        assert!(parse_spec(
            r#"{"mark":"bar","encoding":{"x":{"field":"a","type":"quantitative"},"y":{"field":"v","type":"quantitative"}}}"#
        )
        .is_err());
        // unaggregated bar is legal
        assert!(parse_spec(
            r#"{"mark":"bar","encoding":{"x":{"field":"c","type":"nominal"},"y":{"field":"v","type":"quantitative"}}}"#
        )
        .is_ok());
    }

    #[test]
    fn round_trip_with_options() {
        let text = r#"{"mark":"bar","encoding":{"x":{"field":"v","type":"quantitative","aggregate":"sum","scale":{"zero":false}},"y":{"field":"c","type":"nominal"},"color":{"field":"c","type":"nominal"}},"width":123,"height":45,"opacity":0.3,"sort":"by-value-descending"}"#;
        let s = parse_spec(text).unwrap();
        assert_eq!(s.orientation(), Some(Orientation::Horizontal));
        assert!(!s.encoding.x.scale_zero);
        assert_eq!(parse_spec(&s.to_json_string()).unwrap(), s);
    }

    #[test]
    fn validate_cases() {
        let t = table("cat,val\nX,1\nY,2");
        let spec = parse_spec(MINIMAL).unwrap();
        assert!(validate_spec(&spec, &t).is_empty());

        let typo = ChartSpec::bar("cat", "vall", Aggregate::Mean);
        let issues = validate_spec(&typo, &t);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].severity, Severity::Error);
        assert!(issues[0].message.contains("vall"));

        let text_mean = ChartSpec::bar("val", "cat", Aggregate::Mean);
        let issues = validate_spec(&text_mean, &t);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].severity, Severity::Error);
    }

    #[test]
    fn validate_warnings() {
        let t = table("cat,val\nX,1\nY,2");
        let raw = ChartSpec::bar("cat", "val", Aggregate::None);
        let issues = validate_spec(&raw, &t);
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].severity, Severity::Warning);
        assert!(!has_errors(&issues));
    }
}
