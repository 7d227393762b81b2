//! Compiles a (spec, table) pair into positioned marks.
//!
//! Every mark records backward provenance: the indices of the input rows it
//! was drawn from. Aggregated bars are what the grouped morphisms resample.

use std::collections::HashMap;

use serde::Serialize;

use crate::chartspec::{Aggregate, ChartSpec, Encoding, MarkKind, Orientation, SortOrder};
use crate::data::{ColumnType, DataError, Table, Value};

/// Inset between canvas edge and plot area, when the canvas is large enough.
pub const PLOT_MARGIN: u32 = 10;
pub const POINT_RADIUS: f64 = 4.0;
pub const LINE_WIDTH: f64 = 2.0;
/// Fraction of each band left empty around a bar (half on each side).
pub const BAND_PADDING: f64 = 0.1;

/// Tableau 10.
pub const PALETTE: [Rgba; 10] = [
    Rgba::rgb(0x4e, 0x79, 0xa7),
    Rgba::rgb(0xf2, 0x8e, 0x2b),
    Rgba::rgb(0xe1, 0x57, 0x59),
    Rgba::rgb(0x76, 0xb7, 0xb2),
    Rgba::rgb(0x59, 0xa1, 0x4f),
    Rgba::rgb(0xed, 0xc9, 0x48),
    Rgba::rgb(0xb0, 0x7a, 0xa1),
    Rgba::rgb(0xff, 0x9d, 0xa7),
    Rgba::rgb(0x9c, 0x75, 0x5f),
    Rgba::rgb(0xba, 0xb0, 0xac),
];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SceneError {
    #[error(transparent)]
    Data(#[from] DataError),

    #[error("field '{field}' must be numeric for {purpose}, but it is {ty}")]
    NotNumeric {
        field: String,
        purpose: String,
        ty: ColumnType,
    },

    #[error("bar_heights requires aggregated bar chart")]
    NotAggregatedBar,

    #[error("chart has no nominal positional channel to group by")]
    NoCategoryChannel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Rgba {
    pub r: u8,
    pub g: u8,
    pub b: u8,
    pub a: u8,
}

impl Rgba {
    pub const WHITE: Rgba = Rgba::rgb(255, 255, 255);

    pub const fn rgb(r: u8, g: u8, b: u8) -> Rgba {
        Rgba { r, g, b, a: 255 }
    }
}

/// One category's aggregate and the rows behind it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub category: Value,
    /// `None` when the aggregate had no non-null inputs (degenerate group).
    pub value: Option<f64>,
    /// Source row indices, ascending.
    pub provenance: Vec<usize>,
    pub record_count: usize,
}

impl GroupSummary {
    pub fn is_degenerate(&self) -> bool {
        self.value.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneMarkKind {
    Bar,
    Point,
    LineSegment,
}

/// Pixel geometry. Rectangles are half-open integer pixel spans; circles and
/// segments use continuous coordinates where pixel `(i, j)` has its center
/// at `(i + 0.5, j + 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum Geometry {
    Rect {
        x0: i32,
        y0: i32,
        x1: i32,
        y1: i32,
    },
    Circle {
        cx: f64,
        cy: f64,
        r: f64,
    },
    Segment {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        width: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mark {
    pub kind: SceneMarkKind,
    pub geometry: Geometry,
    pub color: Rgba,
    pub opacity: f64,
    pub provenance: Vec<usize>,
    pub draw_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "scale", rename_all = "lowercase")]
pub enum AxisScale {
    Linear { min: f64, max: f64 },
    Band { categories: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Axis {
    pub field: String,
    #[serde(flatten)]
    pub scale: AxisScale,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SceneGraph {
    pub width: u32,
    pub height: u32,
    pub mark: MarkKind,
    pub aggregated: bool,
    pub marks: Vec<Mark>,
    pub groups: Vec<GroupSummary>,
    pub x_axis: Axis,
    pub y_axis: Axis,
}

impl SceneGraph {
    /// Copy with every mark's opacity multiplied by `factor`.
    pub fn scale_opacity(&self, factor: f64) -> SceneGraph {
        let mut out = self.clone();
        for m in &mut out.marks {
            m.opacity *= factor;
        }
        out
    }

    /// Debug dump of marks, groups and provenance. Not a stable format.
    pub fn to_debug_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene json")
    }
}

/// Groups rows by `category_field` and aggregates `value_field` per group.
///
/// Null categories form their own group. Sums are taken over sorted values,
/// so the result does not depend on row order.
pub fn aggregate_groups(
    table: &Table,
    category_field: &str,
    value_field: &str,
    aggregate: Aggregate,
    sort: SortOrder,
) -> Result<Vec<GroupSummary>, SceneError> {
    let cat_idx = table.column_index(category_field)?;
    let val_idx = table.column_index(value_field)?;
    if aggregate != Aggregate::Count {
        let ty = table.columns()[val_idx].ty;
        if ty != ColumnType::Number {
            return Err(SceneError::NotNumeric {
                field: value_field.to_string(),
                purpose: format!("aggregate '{}'", aggregate.as_str()),
                ty,
            });
        }
    }

    let mut order: Vec<Value> = Vec::new();
    let mut members: HashMap<&Value, Vec<usize>> = HashMap::new();
    for (i, row) in table.rows().iter().enumerate() {
        let key = &row[cat_idx];
        members
            .entry(key)
            .or_insert_with(|| {
                order.push(key.clone());
                Vec::new()
            })
            .push(i);
    }

    let mut groups: Vec<GroupSummary> = order
        .into_iter()
        .map(|category| {
            let provenance = members.remove(&category).unwrap_or_default();
            let mut values: Vec<f64> = provenance
                .iter()
                .filter_map(|&i| table.rows()[i][val_idx].as_f64())
                .collect();
            values.sort_by(f64::total_cmp);
            let value = reduce(aggregate, &values, provenance.len());
            GroupSummary {
                category,
                value,
                record_count: provenance.len(),
                provenance,
            }
        })
        .collect();
    sort_groups(&mut groups, sort);
    Ok(groups)
}

fn reduce(aggregate: Aggregate, sorted: &[f64], rows: usize) -> Option<f64> {
    match aggregate {
        Aggregate::Count => Some(rows as f64),
        _ if sorted.is_empty() => None,
        Aggregate::Sum => Some(sorted.iter().sum()),
        Aggregate::Mean => Some(sorted.iter().sum::<f64>() / sorted.len() as f64),
        Aggregate::Min => sorted.first().copied(),
        Aggregate::Max => sorted.last().copied(),
        // Unaggregated charts never reach here; treat as identity on a
        // single-valued group.
        Aggregate::None => sorted.first().copied(),
    }
}

fn sort_groups(groups: &mut [GroupSummary], sort: SortOrder) {
    match sort {
        SortOrder::ByCategoryAscending => groups.sort_by(|a, b| a.category.cmp_total(&b.category)),
        SortOrder::ByValueDescending => groups.sort_by(|a, b| match (a.value, b.value) {
            (Some(x), Some(y)) => y
                .total_cmp(&x)
                .then_with(|| a.category.cmp_total(&b.category)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.category.cmp_total(&b.category),
        }),
        SortOrder::None => {}
    }
}

/// Continuous plot-area bounds in pixel coordinates.
#[derive(Debug, Clone, Copy)]
struct PlotArea {
    left: f64,
    right: f64,
    top: f64,
    bottom: f64,
}

impl PlotArea {
    fn for_canvas(width: u32, height: u32) -> PlotArea {
        let mx = if width >= 4 * PLOT_MARGIN {
            PLOT_MARGIN
        } else {
            0
        } as f64;
        let my = if height >= 4 * PLOT_MARGIN {
            PLOT_MARGIN
        } else {
            0
        } as f64;
        PlotArea {
            left: mx,
            right: width as f64 - mx,
            top: my,
            bottom: height as f64 - my,
        }
    }
}

#[derive(Debug, Clone)]
enum Scale {
    Linear { min: f64, max: f64 },
    Band { categories: Vec<Value> },
}

impl Scale {
    fn linear(values: impl Iterator<Item = f64>, zero: bool) -> Scale {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if lo > hi {
            return Scale::Linear { min: 0.0, max: 1.0 };
        }
        let (mut min, mut max) = if zero {
            (lo.min(0.0), hi.max(0.0))
        } else {
            let pad = (hi - lo) * 0.05;
            (lo - pad, hi + pad)
        };
        if min == max {
            min -= 1.0;
            max += 1.0;
        }
        Scale::Linear { min, max }
    }

    fn to_axis(&self, field: &str) -> Axis {
        Axis {
            field: field.to_string(),
            scale: match self {
                Scale::Linear { min, max } => AxisScale::Linear {
                    min: *min,
                    max: *max,
                },
                Scale::Band { categories } => AxisScale::Band {
                    categories: categories.iter().map(Value::label).collect(),
                },
            },
        }
    }

    /// Fraction in [0, 1] along the axis for a linear value.
    fn frac(&self, v: f64) -> f64 {
        match self {
            Scale::Linear { min, max } => ((v - min) / (max - min)).clamp(0.0, 1.0),
            Scale::Band { .. } => 0.0,
        }
    }

    /// Baseline value for bars: zero when inside the domain, else the
    /// nearer domain bound.
    fn baseline(&self) -> f64 {
        match self {
            Scale::Linear { min, max } => 0.0f64.clamp(*min, *max),
            Scale::Band { .. } => 0.0,
        }
    }

    fn band_index(&self, v: &Value) -> Option<usize> {
        match self {
            Scale::Band { categories } => categories.iter().position(|c| c == v),
            Scale::Linear { .. } => None,
        }
    }

    fn band_count(&self) -> usize {
        match self {
            Scale::Band { categories } => categories.len().max(1),
            Scale::Linear { .. } => 1,
        }
    }
}

/// Pixel mapping for one axis.
#[derive(Debug, Clone, Copy)]
struct Span {
    start: f64,
    end: f64,
    flipped: bool,
}

impl Span {
    fn pos(&self, frac: f64) -> f64 {
        let f = if self.flipped { 1.0 - frac } else { frac };
        self.start + f * (self.end - self.start)
    }

    fn band(&self, index: usize, count: usize) -> (f64, f64) {
        let w = (self.end - self.start) / count as f64;
        let a = self.start + w * index as f64;
        (a, a + w)
    }
}

fn round_px(v: f64) -> i32 {
    (v + 0.5).floor() as i32
}

fn numeric_column(table: &Table, enc: &Encoding, purpose: &str) -> Result<usize, SceneError> {
    let idx = table.column_index(&enc.field)?;
    let ty = table.columns()[idx].ty;
    if ty != ColumnType::Number {
        return Err(SceneError::NotNumeric {
            field: enc.field.clone(),
            purpose: purpose.to_string(),
            ty,
        });
    }
    Ok(idx)
}

fn color_lookup(
    table: &Table,
    spec: &ChartSpec,
) -> Result<Option<(usize, Vec<Value>)>, SceneError> {
    let Some(enc) = &spec.encoding.color else {
        return Ok(None);
    };
    let idx = table.column_index(&enc.field)?;
    let mut cats: Vec<Value> = Vec::new();
    for row in table.rows() {
        if !cats.contains(&row[idx]) {
            cats.push(row[idx].clone());
        }
    }
    cats.sort_by(Value::cmp_total);
    Ok(Some((idx, cats)))
}

fn palette_color(cats: &[Value], v: &Value) -> Rgba {
    let i = cats.iter().position(|c| c == v).unwrap_or(0);
    PALETTE[i % PALETTE.len()]
}

/// Builds the scene graph. Deterministic in (spec, table).
pub fn compile(spec: &ChartSpec, table: &Table) -> Result<SceneGraph, SceneError> {
    compile_with_extent(spec, table, &[])
}

/// Like [`compile`], but an aggregated chart's value axis is widened to
/// cover `extent` as well. Scenes meant to be overlaid share one axis this
/// way.
pub fn compile_with_extent(
    spec: &ChartSpec,
    table: &Table,
    extent: &[f64],
) -> Result<SceneGraph, SceneError> {
    let area = PlotArea::for_canvas(spec.width, spec.height);
    let xs = Span {
        start: area.left,
        end: area.right,
        flipped: false,
    };
    let ys = Span {
        start: area.top,
        end: area.bottom,
        flipped: true,
    };
    let colors = color_lookup(table, spec)?;
    let mut builder = SceneBuilder {
        spec,
        width: spec.width,
        height: spec.height,
        marks: Vec::new(),
    };

    if spec.is_aggregated() {
        let (cat_enc, val_enc) = spec
            .category_and_value()
            .ok_or(SceneError::NoCategoryChannel)?;
        let groups = aggregate_groups(
            table,
            &cat_enc.field,
            &val_enc.field,
            val_enc.aggregate,
            spec.sort,
        )?;
        let band = Scale::Band {
            categories: groups.iter().map(|g| g.category.clone()).collect(),
        };
        let lin = Scale::linear(
            groups
                .iter()
                .filter_map(|g| g.value)
                .chain(extent.iter().copied()),
            val_enc.scale_zero,
        );
        let orient = spec
            .orientation()
            .expect("aggregated charts have an orientation");
        let (cat_span, val_span) = match orient {
            Orientation::Vertical => (xs, ys),
            Orientation::Horizontal => (ys, xs),
        };

        let color_of = |g: &GroupSummary| match &colors {
            Some((_, cats)) => palette_color(cats, &g.category),
            None => PALETTE[0],
        };
        let n = groups.len();
        let mut prev: Option<(f64, f64, &GroupSummary)> = None;
        for (i, g) in groups.iter().enumerate() {
            let (b0, b1) = cat_span.band(i, n.max(1));
            match spec.mark {
                MarkKind::Bar => {
                    let pad = (b1 - b0) * BAND_PADDING / 2.0;
                    let v = g.value.unwrap_or_else(|| lin.baseline());
                    let p_val = val_span.pos(lin.frac(v));
                    let p_base = val_span.pos(lin.frac(lin.baseline()));
                    builder.push_bar(
                        orient,
                        (b0 + pad, b1 - pad),
                        (p_val, p_base),
                        color_of(g),
                        g.provenance.clone(),
                    );
                }
                MarkKind::Point | MarkKind::Line => {
                    let Some(v) = g.value else { continue };
                    let c = (b0 + b1) / 2.0;
                    let p = val_span.pos(lin.frac(v));
                    let (px, py) = match orient {
                        Orientation::Vertical => (c, p),
                        Orientation::Horizontal => (p, c),
                    };
                    if spec.mark == MarkKind::Point {
                        builder.push_point(px, py, color_of(g), g.provenance.clone());
                    } else {
                        if let Some((qx, qy, pg)) = prev {
                            let mut prov = pg.provenance.clone();
                            prov.extend(&g.provenance);
                            prov.sort_unstable();
                            builder.push_segment((qx, qy), (px, py), color_of(g), prov);
                        }
                        prev = Some((px, py, g));
                    }
                }
            }
        }
        let (x_scale, y_scale) = match orient {
            Orientation::Vertical => (&band, &lin),
            Orientation::Horizontal => (&lin, &band),
        };
        return Ok(SceneGraph {
            width: spec.width,
            height: spec.height,
            mark: spec.mark,
            aggregated: true,
            marks: builder.marks,
            groups,
            x_axis: x_scale.to_axis(&spec.encoding.x.field),
            y_axis: y_scale.to_axis(&spec.encoding.y.field),
        });
    }

    // Unaggregated: one mark per row (lines: one segment per consecutive pair).
    let x_enc = &spec.encoding.x;
    let y_enc = &spec.encoding.y;
    let x_col = if x_enc.is_quantitative() {
        numeric_column(table, x_enc, "a quantitative x encoding")?
    } else {
        table.column_index(&x_enc.field)?
    };
    let y_col = if y_enc.is_quantitative() {
        numeric_column(table, y_enc, "a quantitative y encoding")?
    } else {
        table.column_index(&y_enc.field)?
    };

    // Rows that can be placed: quantitative cells must be numbers.
    let placed: Vec<usize> = (0..table.row_count())
        .filter(|&i| {
            let row = &table.rows()[i];
            (!x_enc.is_quantitative() || row[x_col].as_f64().is_some())
                && (!y_enc.is_quantitative() || row[y_col].as_f64().is_some())
        })
        .collect();

    let axis_scale = |enc: &Encoding, col: usize, other_col: Option<usize>| -> Scale {
        if enc.is_quantitative() {
            Scale::linear(
                placed.iter().filter_map(|&i| table.rows()[i][col].as_f64()),
                enc.scale_zero,
            )
        } else {
            Scale::Band {
                categories: band_order(table, &placed, col, other_col, spec.sort),
            }
        }
    };
    let x_scale = axis_scale(x_enc, x_col, y_enc.is_quantitative().then_some(y_col));
    let y_scale = axis_scale(y_enc, y_col, x_enc.is_quantitative().then_some(x_col));

    let coord = |scale: &Scale, span: &Span, v: &Value| -> (f64, f64) {
        // (center, band half-extent); linear scales have zero extent.
        match scale {
            Scale::Linear { .. } => (span.pos(scale.frac(v.as_f64().unwrap_or(0.0))), 0.0),
            Scale::Band { .. } => {
                let idx = scale.band_index(v).unwrap_or(0);
                let (a, b) = span.band(idx, scale.band_count());
                ((a + b) / 2.0, (b - a) / 2.0)
            }
        }
    };
    let color_of = |row: &[Value]| match &colors {
        Some((idx, cats)) => palette_color(cats, &row[*idx]),
        None => PALETTE[0],
    };

    match spec.mark {
        MarkKind::Bar => {
            let orient = spec.orientation().expect("bar charts have an orientation");
            for &i in &placed {
                let row = &table.rows()[i];
                let (cat_scale, cat_span, cat_col, val_scale, val_span, val_col) = match orient {
                    Orientation::Vertical => (&x_scale, &xs, x_col, &y_scale, &ys, y_col),
                    Orientation::Horizontal => (&y_scale, &ys, y_col, &x_scale, &xs, x_col),
                };
                let (c, half) = coord(cat_scale, cat_span, &row[cat_col]);
                let pad = half * BAND_PADDING;
                let v = row[val_col].as_f64().unwrap_or(0.0);
                let p_val = val_span.pos(val_scale.frac(v));
                let p_base = val_span.pos(val_scale.frac(val_scale.baseline()));
                builder.push_bar(
                    orient,
                    (c - half + pad, c + half - pad),
                    (p_val, p_base),
                    color_of(row),
                    vec![i],
                );
            }
        }
        MarkKind::Point => {
            for &i in &placed {
                let row = &table.rows()[i];
                let (px, _) = coord(&x_scale, &xs, &row[x_col]);
                let (py, _) = coord(&y_scale, &ys, &row[y_col]);
                builder.push_point(px, py, color_of(row), vec![i]);
            }
        }
        MarkKind::Line => {
            // Series by color category, each ordered by x then row index.
            let mut series: Vec<(Rgba, Option<usize>, Vec<usize>)> = Vec::new();
            for &i in &placed {
                let row = &table.rows()[i];
                let key = colors
                    .as_ref()
                    .map(|(idx, cats)| cats.iter().position(|c| *c == row[*idx]).unwrap_or(0));
                match series.iter_mut().find(|s| s.1 == key) {
                    Some(s) => s.2.push(i),
                    None => series.push((color_of(row), key, vec![i])),
                }
            }
            series.sort_by_key(|s| s.1);
            for (color, _, mut rows) in series {
                let xkey = |i: usize| -> f64 {
                    let v = &table.rows()[i][x_col];
                    match &x_scale {
                        Scale::Linear { .. } => v.as_f64().unwrap_or(0.0),
                        Scale::Band { .. } => x_scale.band_index(v).unwrap_or(0) as f64,
                    }
                };
                rows.sort_by(|&a, &b| xkey(a).total_cmp(&xkey(b)).then(a.cmp(&b)));
                for pair in rows.windows(2) {
                    let pa = &table.rows()[pair[0]];
                    let pb = &table.rows()[pair[1]];
                    let a = (
                        coord(&x_scale, &xs, &pa[x_col]).0,
                        coord(&y_scale, &ys, &pa[y_col]).0,
                    );
                    let b = (
                        coord(&x_scale, &xs, &pb[x_col]).0,
                        coord(&y_scale, &ys, &pb[y_col]).0,
                    );
                    builder.push_segment(a, b, color, vec![pair[0], pair[1]]);
                }
            }
        }
    }

    Ok(SceneGraph {
        width: spec.width,
        height: spec.height,
        mark: spec.mark,
        aggregated: false,
        marks: builder.marks,
        groups: Vec::new(),
        x_axis: x_scale.to_axis(&x_enc.field),
        y_axis: y_scale.to_axis(&y_enc.field),
    })
}

/// Category order for a band axis in an unaggregated chart.
fn band_order(
    table: &Table,
    placed: &[usize],
    col: usize,
    value_col: Option<usize>,
    sort: SortOrder,
) -> Vec<Value> {
    let mut cats: Vec<Value> = Vec::new();
    let mut best: Vec<f64> = Vec::new();
    for &i in placed {
        let row = &table.rows()[i];
        let v = value_col
            .and_then(|c| row[c].as_f64())
            .unwrap_or(f64::NEG_INFINITY);
        match cats.iter().position(|c| *c == row[col]) {
            Some(k) => best[k] = best[k].max(v),
            None => {
                cats.push(row[col].clone());
                best.push(v);
            }
        }
    }
    match sort {
        SortOrder::ByCategoryAscending => cats.sort_by(Value::cmp_total),
        SortOrder::ByValueDescending => {
            let mut keyed: Vec<(Value, f64)> = cats.into_iter().zip(best).collect();
            keyed.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp_total(&b.0)));
            cats = keyed.into_iter().map(|(c, _)| c).collect();
        }
        SortOrder::None => {}
    }
    cats
}

struct SceneBuilder<'a> {
    spec: &'a ChartSpec,
    width: u32,
    height: u32,
    marks: Vec<Mark>,
}

impl SceneBuilder<'_> {
    fn push(
        &mut self,
        kind: SceneMarkKind,
        geometry: Geometry,
        color: Rgba,
        provenance: Vec<usize>,
    ) {
        let draw_order = self.marks.len();
        self.marks.push(Mark {
            kind,
            geometry,
            color,
            opacity: self.spec.opacity,
            provenance,
            draw_order,
        });
    }

    /// `band` spans the category axis; `value` holds (value end, baseline).
    fn push_bar(
        &mut self,
        orient: Orientation,
        band: (f64, f64),
        value: (f64, f64),
        color: Rgba,
        provenance: Vec<usize>,
    ) {
        let (w, h) = (self.width as i32, self.height as i32);
        let (c0, c1) = (round_px(band.0), round_px(band.1));
        let (v0, v1) = (
            round_px(value.0.min(value.1)),
            round_px(value.0.max(value.1)),
        );
        let geometry = match orient {
            Orientation::Vertical => Geometry::Rect {
                x0: c0.clamp(0, w),
                x1: c1.clamp(0, w),
                y0: v0.clamp(0, h),
                y1: v1.clamp(0, h),
            },
            Orientation::Horizontal => Geometry::Rect {
                x0: v0.clamp(0, w),
                x1: v1.clamp(0, w),
                y0: c0.clamp(0, h),
                y1: c1.clamp(0, h),
            },
        };
        self.push(SceneMarkKind::Bar, geometry, color, provenance);
    }

    fn push_point(&mut self, cx: f64, cy: f64, color: Rgba, provenance: Vec<usize>) {
        let geometry = Geometry::Circle {
            cx: cx.clamp(0.0, self.width as f64),
            cy: cy.clamp(0.0, self.height as f64),
            r: POINT_RADIUS,
        };
        self.push(SceneMarkKind::Point, geometry, color, provenance);
    }

    fn push_segment(&mut self, a: (f64, f64), b: (f64, f64), color: Rgba, provenance: Vec<usize>) {
        let (w, h) = (self.width as f64, self.height as f64);
        let geometry = Geometry::Segment {
            x0: a.0.clamp(0.0, w),
            y0: a.1.clamp(0.0, h),
            x1: b.0.clamp(0.0, w),
            y1: b.1.clamp(0.0, h),
            width: LINE_WIDTH,
        };
        self.push(SceneMarkKind::LineSegment, geometry, color, provenance);
    }
}

/// Aggregated bar values in display order, in data units.
///
/// Degenerate groups (no non-null inputs) are drawn at the baseline and
/// reported here as `0.0`.
pub fn bar_heights(scene: &SceneGraph) -> Result<Vec<(Value, f64)>, SceneError> {
    if scene.mark != MarkKind::Bar || !scene.aggregated {
        return Err(SceneError::NotAggregatedBar);
    }
    Ok(scene
        .groups
        .iter()
        .map(|g| (g.category.clone(), g.value.unwrap_or(0.0)))
        .collect())
}
