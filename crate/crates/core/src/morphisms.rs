//! Data (α) and visual (ω) perturbations.
//!
//! Grouped morphisms find each bar's rows through the provenance recorded by
//! [`aggregate_groups`]. Rows whose category is Null belong to no resampled
//! group; they pass through unchanged and are appended after the groups.

use serde::Serialize;

use crate::chartspec::{Aggregate, ChartSpec, SortOrder};
use crate::data::{ColumnType, DataError, Table, Value};
use crate::rng::Rng;
use crate::scene::{aggregate_groups, SceneError};

pub use crate::rng::derive_seed;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MorphismError {
    #[error(transparent)]
    Data(#[from] DataError),

    #[error(transparent)]
    Scene(#[from] SceneError),

    #[error("value field '{field}' must be numeric, but it is {ty}")]
    NonNumericValue { field: String, ty: ColumnType },

    #[error("opacity factor {0} outside (0, 1]")]
    BadOpacity(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum DataMorphism {
    Identity,
    Shuffle,
    Bootstrap {
        category_field: String,
        value_field: String,
    },
    #[serde(rename = "contract")]
    ContractRecords {
        category_field: String,
        value_field: String,
    },
    #[serde(rename = "randomize")]
    RandomizeAssignment {
        category_field: String,
        value_field: String,
    },
}

impl DataMorphism {
    /// Stable name used in reports and seed derivation.
    pub fn tag(&self) -> &'static str {
        match self {
            DataMorphism::Identity => "identity",
            DataMorphism::Shuffle => "shuffle",
            DataMorphism::Bootstrap { .. } => "bootstrap",
            DataMorphism::ContractRecords { .. } => "contract",
            DataMorphism::RandomizeAssignment { .. } => "randomize",
        }
    }

    pub fn is_random(&self) -> bool {
        !matches!(self, DataMorphism::Identity)
    }

    pub fn apply(&self, table: &Table, rng: &mut Rng) -> Result<Table, MorphismError> {
        match self {
            DataMorphism::Identity => Ok(table.clone()),
            DataMorphism::Shuffle => Ok(shuffle_rows(table, rng)),
            DataMorphism::Bootstrap {
                category_field,
                value_field,
            } => bootstrap_groups(table, category_field, value_field, rng),
            DataMorphism::ContractRecords {
                category_field,
                value_field,
            } => contract_groups(table, category_field, value_field, rng),
            DataMorphism::RandomizeAssignment {
                category_field,
                value_field,
            } => randomize_assignment(table, category_field, value_field, rng),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum VisualMorphism {
    Identity,
    #[serde(rename = "opacity")]
    OpacityScale {
        f: f64,
    },
}

impl VisualMorphism {
    pub fn opacity(f: f64) -> Result<VisualMorphism, MorphismError> {
        if f > 0.0 && f <= 1.0 {
            Ok(VisualMorphism::OpacityScale { f })
        } else {
            Err(MorphismError::BadOpacity(f))
        }
    }
}

/// Uniform random row permutation.
pub fn shuffle_rows(table: &Table, rng: &mut Rng) -> Table {
    let mut idx: Vec<usize> = (0..table.row_count()).collect();
    rng.shuffle(&mut idx);
    table
        .select_rows(&idx)
        .expect("permutation indices are in range")
}

/// Non-null groups (first-appearance order) plus the rows with Null category.
fn groups_of(
    table: &Table,
    category_field: &str,
    value_field: &str,
) -> Result<(Vec<Vec<usize>>, Vec<usize>), MorphismError> {
    let v = table.column_index(value_field)?;
    let ty = table.columns()[v].ty;
    if ty != ColumnType::Number {
        return Err(MorphismError::NonNumericValue {
            field: value_field.to_string(),
            ty,
        });
    }
    let groups = aggregate_groups(
        table,
        category_field,
        value_field,
        Aggregate::Count,
        SortOrder::None,
    )?;
    let mut members = Vec::new();
    let mut nulls = Vec::new();
    for g in groups {
        if g.category.is_null() {
            nulls = g.provenance;
        } else {
            members.push(g.provenance);
        }
    }
    Ok((members, nulls))
}

/// Resamples each group's rows with replacement back to the group's size.
pub fn bootstrap_groups(
    table: &Table,
    category_field: &str,
    value_field: &str,
    rng: &mut Rng,
) -> Result<Table, MorphismError> {
    let (groups, nulls) = groups_of(table, category_field, value_field)?;
    let mut idx = Vec::with_capacity(table.row_count());
    for rows in &groups {
        for _ in 0..rows.len() {
            idx.push(rows[rng.below(rows.len())]);
        }
    }
    idx.extend(nulls);
    Ok(table.select_rows(&idx)?)
}

/// Downsamples every group, without replacement, to the smallest group size.
pub fn contract_groups(
    table: &Table,
    category_field: &str,
    value_field: &str,
    rng: &mut Rng,
) -> Result<Table, MorphismError> {
    let (groups, nulls) = groups_of(table, category_field, value_field)?;
    let Some(m) = groups.iter().map(Vec::len).min() else {
        return Ok(table.clone());
    };
    let mut idx = Vec::with_capacity(m * groups.len() + nulls.len());
    for rows in groups {
        let mut rows = rows;
        // Partial Fisher–Yates: the first m slots are a uniform m-subset.
        for i in 0..m {
            let j = i + rng.below(rows.len() - i);
            rows.swap(i, j);
        }
        idx.extend_from_slice(&rows[..m]);
    }
    idx.extend(nulls);
    Ok(table.select_rows(&idx)?)
}

/// Permutes the value column against the category column. Every other
/// column stays with its row (and so with the category).
pub fn randomize_assignment(
    table: &Table,
    category_field: &str,
    value_field: &str,
    rng: &mut Rng,
) -> Result<Table, MorphismError> {
    table.column_index(category_field)?;
    let v = table.column_index(value_field)?;
    let ty = table.columns()[v].ty;
    if ty != ColumnType::Number {
        return Err(MorphismError::NonNumericValue {
            field: value_field.to_string(),
            ty,
        });
    }
    let mut values: Vec<Value> = table.rows().iter().map(|r| r[v].clone()).collect();
    rng.shuffle(&mut values);
    let rows = table
        .rows()
        .iter()
        .zip(values)
        .map(|(r, val)| {
            let mut r = r.clone();
            r[v] = val;
            r
        })
        .collect();
    Ok(table.with_rows(rows))
}

pub fn apply_visual(morphism: VisualMorphism, spec: &ChartSpec) -> ChartSpec {
    match morphism {
        VisualMorphism::Identity => spec.clone(),
        VisualMorphism::OpacityScale { f } => {
            let mut out = spec.clone();
            out.opacity *= f;
            out
        }
    }
}
