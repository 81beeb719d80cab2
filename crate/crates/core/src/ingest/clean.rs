use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::record::{CollisionRecord, ImputationLog};
use super::schema::{ColumnSchema, Field};
use crate::error::{Error, Result};

/// Invalid-cell counts per column plus the number of rows with any invalid cell.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvalidScan {
    pub per_column: BTreeMap<Field, usize>,
    pub affected_rows: usize,
    pub total_rows: usize,
}

impl InvalidScan {
    pub fn total_invalid_cells(&self) -> usize {
        self.per_column.values().sum()
    }
}

pub fn scan_invalid(records: &[CollisionRecord], schema: &[ColumnSchema]) -> InvalidScan {
    let mut per_column: BTreeMap<Field, usize> = schema.iter().map(|c| (c.name, 0)).collect();
    let mut affected_rows = 0;
    for r in records {
        let mut any = false;
        for col in schema {
            if col.is_invalid(r.get(col.name)) {
                *per_column.get_mut(&col.name).expect("seeded above") += 1;
                any = true;
            }
        }
        affected_rows += usize::from(any);
    }
    InvalidScan { per_column, affected_rows, total_rows: records.len() }
}

/// Most frequent valid value; ties go to the smallest code.
pub fn column_mode(records: &[CollisionRecord], col: &ColumnSchema) -> Option<i64> {
    let mut freq: BTreeMap<i64, usize> = BTreeMap::new();
    for r in records {
        let v = r.get(col.name);
        if !col.is_invalid(v) {
            *freq.entry(v).or_default() += 1;
        }
    }
    // BTreeMap iterates codes ascending, so keeping only strict improvements
    // leaves the smallest code among equals.
    let mut best: Option<(i64, usize)> = None;
    for (v, n) in freq {
        if best.is_none_or(|(_, bn)| n > bn) {
            best = Some((v, n));
        }
    }
    best.map(|(v, _)| v)
}

/// Replaces every invalid cell with its column's mode over valid cells.
pub fn impute_mode(
    records: &[CollisionRecord],
    schema: &[ColumnSchema],
) -> Result<(Vec<CollisionRecord>, Vec<ImputationLog>)> {
    let plans = schema
        .par_iter()
        .map(|col| {
            let affected: Vec<usize> =
                records.iter().enumerate().filter(|(_, r)| col.is_invalid(r.get(col.name))).map(|(i, _)| i).collect();
            let mode = match column_mode(records, col) {
                Some(m) => m,
                None if affected.is_empty() => 0,
                None => return Err(Error::AllInvalidColumn(col.name.to_string())),
            };
            Ok((col.name, mode, affected))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = records.to_vec();
    let mut logs = Vec::with_capacity(plans.len());
    for (field, mode, affected) in plans {
        for &i in &affected {
            out[i].set(field, mode);
        }
        logs.push(ImputationLog {
            column: field,
            replaced_count: affected.len(),
            mode_value: mode,
            affected_row_ids: affected.iter().map(|&i| records[i].collision_id.clone()).collect(),
        });
    }
    Ok((out, logs))
}

/// Removes collisions with more than `max_casualties` casualties, keeping order.
pub fn drop_casualty_outliers(
    records: &[CollisionRecord],
    max_casualties: i64,
) -> Result<(Vec<CollisionRecord>, Vec<String>)> {
    if max_casualties < 1 {
        return Err(Error::Config(format!("max_casualties must be at least 1, got {max_casualties}")));
    }
    let mut kept = Vec::with_capacity(records.len());
    let mut dropped = Vec::new();
    for r in records {
        if r.number_of_casualties() > max_casualties {
            dropped.push(r.collision_id.clone());
        } else {
            kept.push(r.clone());
        }
    }
    Ok((kept, dropped))
}
