use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::record::{CasualtyRow, CollisionRecord};
use super::schema::{ColumnSchema, Field};
use crate::error::{Error, Result};

/// Header names for the non-schema collision columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollisionLayout {
    pub id_column: String,
    pub x_column: String,
    pub y_column: String,
}

impl Default for CollisionLayout {
    fn default() -> Self {
        CollisionLayout { id_column: "collision_id".into(), x_column: "x".into(), y_column: "y".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CasualtyLayout {
    pub id_column: String,
    pub class_column: String,
    pub severity_column: String,
}

impl Default for CasualtyLayout {
    fn default() -> Self {
        CasualtyLayout {
            id_column: "collision_id".into(),
            class_column: "casualty_class".into(),
            severity_column: "casualty_severity".into(),
        }
    }
}

fn column_index(headers: &csv::StringRecord, name: &str, source_name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn { source_name: source_name.to_string(), column: name.to_string() })
}

fn parse_code(cell: &str, field: Field, row: usize, header: &str) -> Result<i64> {
    let cell = cell.trim();
    let malformed = |reason: String| Error::MalformedCell { row, column: header.to_string(), reason };
    if let Ok(v) = cell.parse::<i64>() {
        return Ok(v);
    }
    // Clock times round to the nearest hour, so 23:30 and later become 24.
    if field == Field::NearestHour {
        if let Some((h, m)) = cell.split_once(':') {
            let h: i64 = h.parse().map_err(|_| malformed(format!("bad time `{cell}`")))?;
            let m: i64 = m.get(..2).unwrap_or(m).parse().map_err(|_| malformed(format!("bad time `{cell}`")))?;
            if !(0..24).contains(&h) || !(0..60).contains(&m) {
                return Err(malformed(format!("bad time `{cell}`")));
            }
            return Ok(if m >= 30 { h + 1 } else { h });
        }
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 1e15 => Ok(v as i64),
        _ => Err(malformed(format!("expected an integer code, found `{cell}`"))),
    }
}

fn parse_coord(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Reads the collision file. Rows are numbered from 1 (first data row).
pub fn parse_collisions<R: Read>(
    source: R,
    source_name: &str,
    schema: &[ColumnSchema],
    layout: &CollisionLayout,
) -> Result<Vec<CollisionRecord>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let id_idx = column_index(&headers, &layout.id_column, source_name)?;
    let columns = schema
        .iter()
        .map(|c| Ok((c.name, c.header(), column_index(&headers, c.header(), source_name)?)))
        .collect::<Result<Vec<_>>>()?;
    let x_idx = headers.iter().position(|h| h.trim() == layout.x_column);
    let y_idx = headers.iter().position(|h| h.trim() == layout.y_column);

    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let cell = |idx: usize, column: &str| {
            row.get(idx).ok_or_else(|| Error::MalformedCell {
                row: row_no,
                column: column.to_string(),
                reason: "row is shorter than the header".into(),
            })
        };
        let id = cell(id_idx, &layout.id_column)?.trim().to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateKey { id, row: row_no });
        }
        let mut record = CollisionRecord::new(id);
        for &(field, header, idx) in &columns {
            record.set(field, parse_code(cell(idx, header)?, field, row_no, header)?);
        }
        record.x = x_idx.and_then(|i| row.get(i)).and_then(parse_coord);
        record.y = y_idx.and_then(|i| row.get(i)).and_then(parse_coord);
        records.push(record);
    }
    Ok(records)
}

/// Reads the casualty file; several rows may share one collision id.
pub fn parse_casualties<R: Read>(source: R, source_name: &str, layout: &CasualtyLayout) -> Result<Vec<CasualtyRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(source);
    let headers = reader.headers()?.clone();
    let id_idx = column_index(&headers, &layout.id_column, source_name)?;
    let class_idx = column_index(&headers, &layout.class_column, source_name)?;
    let sev_idx = column_index(&headers, &layout.severity_column, source_name)?;

    let mut rows = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row?;
        let get = |idx: usize, column: &str| {
            row.get(idx).map(str::trim).ok_or_else(|| Error::MalformedCell {
                row: row_no,
                column: column.to_string(),
                reason: "row is shorter than the header".into(),
            })
        };
        let class_cell = get(class_idx, &layout.class_column)?;
        let casualty_class = class_cell.parse::<i64>().map_err(|_| Error::MalformedCell {
            row: row_no,
            column: layout.class_column.clone(),
            reason: format!("expected an integer code, found `{class_cell}`"),
        })?;
        let sev_cell = get(sev_idx, &layout.severity_column)?;
        let casualty_severity = match sev_cell.parse::<u8>() {
            Ok(s @ 1..=3) => s,
            _ => {
                return Err(Error::MalformedCell {
                    row: row_no,
                    column: layout.severity_column.clone(),
                    reason: format!("severity must be 1, 2 or 3, found `{sev_cell}`"),
                })
            }
        };
        rows.push(CasualtyRow {
            collision_id: get(id_idx, &layout.id_column)?.to_string(),
            casualty_class,
            casualty_severity,
        });
    }
    Ok(rows)
}

/// Writes collisions with the same header names the parser expects.
pub fn write_collisions<W: Write>(
    sink: W,
    records: &[CollisionRecord],
    schema: &[ColumnSchema],
    layout: &CollisionLayout,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec![layout.id_column.as_str()];
    header.extend(schema.iter().map(|c| c.header()));
    header.push(&layout.x_column);
    header.push(&layout.y_column);
    w.write_record(&header)?;
    let coord = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in records {
        let mut row = vec![r.collision_id.clone()];
        row.extend(schema.iter().map(|c| r.get(c.name).to_string()));
        row.push(coord(r.x));
        row.push(coord(r.y));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}

pub fn write_casualties<W: Write>(sink: W, rows: &[CasualtyRow], layout: &CasualtyLayout) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record([&layout.id_column, &layout.class_column, &layout.severity_column])?;
    for r in rows {
        w.write_record([r.collision_id.clone(), r.casualty_class.to_string(), r.casualty_severity.to_string()])?;
    }
    w.flush().map_err(|e| Error::io("<csv sink>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::schema::default_schema;

    const HEADER: &str = "collision_id,number_of_vehicles,number_of_casualties,day_of_week,nearest_hour,road_type,speed_limit,junction_control,junction_detail,light_conditions,weather_conditions,road_surface_conditions,police_attendance,human_control_crossing,x,y";

    fn fixture(rows: &[&str]) -> String {
        let mut s = HEADER.to_string();
        for r in rows {
            s.push('\n');
            s.push_str(r);
        }
        s
    }

    #[test]
    fn parses_well_formed_rows() {
        let csv = fixture(&[
            "a1,2,1,3,14,6,30,4,3,1,1,1,1,0,10.5,20.5",
            "a2,1,1,5,08:40,6,20,2,6,4,2,2,2,0,11,21",
            "a3,1,2,7,23,3,70,4,0,6,1,1,1,0,,",
        ]);
        let recs = parse_collisions(csv.as_bytes(), "t", &default_schema(), &CollisionLayout::default()).unwrap();
        assert_eq!(recs.len(), 3);
        let ids: Vec<_> = recs.iter().map(|r| r.collision_id.as_str()).collect();
        assert_eq!(ids, ["a1", "a2", "a3"]);
        assert_eq!(recs[0].get(Field::SpeedLimit), 30);
        assert_eq!(recs[1].get(Field::NearestHour), 9);
        assert_eq!(recs[0].x, Some(10.5));
        assert!(!recs[2].has_coordinates());
    }

    #[test]
    fn duplicate_id_is_rejected() {
        let csv = fixture(&["a1,2,1,3,14,6,30,4,3,1,1,1,1,0,1,1", "a1,1,1,5,8,6,20,2,6,4,2,2,2,0,1,1"]);
        let err = parse_collisions(csv.as_bytes(), "t", &default_schema(), &CollisionLayout::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateKey { ref id, row: 2 } if id == "a1"));
    }

    #[test]
    fn malformed_cell_names_location() {
        let csv = fixture(&["a1,2,1,3,14,6,fast,4,3,1,1,1,1,0,1,1"]);
        let err = parse_collisions(csv.as_bytes(), "t", &default_schema(), &CollisionLayout::default()).unwrap_err();
        assert!(matches!(err, Error::MalformedCell { row: 1, ref column, .. } if column == "speed_limit"));
    }

    #[test]
    fn missing_column_reported() {
        let csv = "collision_id,number_of_vehicles\na,1\n";
        let err = parse_collisions(csv.as_bytes(), "t", &default_schema(), &CollisionLayout::default()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn { ref column, .. } if column == "number_of_casualties"));
    }

    #[test]
    fn casualties_allow_repeated_ids_and_reject_bad_severity() {
        let ok = "collision_id,casualty_class,casualty_severity\nc1,1,3\nc1,3,2\n";
        let rows = parse_casualties(ok.as_bytes(), "t", &CasualtyLayout::default()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.collision_id == "c1"));

        let bad = "collision_id,casualty_class,casualty_severity\nc1,1,4\n";
        let err = parse_casualties(bad.as_bytes(), "t", &CasualtyLayout::default()).unwrap_err();
        assert!(matches!(err, Error::MalformedCell { row: 1, .. }));
    }

    #[test]
    fn write_then_parse_is_lossless() {
        let schema = default_schema();
        let csv = fixture(&["a1,2,1,3,14,6,30,4,3,1,1,1,1,0,530123.25,180456.5", "a2,1,1,5,8,6,20,2,6,4,2,2,2,0,,"]);
        let layout = CollisionLayout::default();
        let recs = parse_collisions(csv.as_bytes(), "t", &schema, &layout).unwrap();
        let mut buf = Vec::new();
        write_collisions(&mut buf, &recs, &schema, &layout).unwrap();
        let again = parse_collisions(buf.as_slice(), "t", &schema, &layout).unwrap();
        assert_eq!(recs, again);
    }
}
