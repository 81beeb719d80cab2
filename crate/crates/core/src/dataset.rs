use std::collections::BTreeSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ColumnKind;

/// The three binary outcomes a run can model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Pedestrian,
    OverSerious,
    PedestrianOverSerious,
}

impl TargetKind {
    pub const ALL: [TargetKind; 3] =
        [TargetKind::Pedestrian, TargetKind::OverSerious, TargetKind::PedestrianOverSerious];

    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Pedestrian => "pedestrian",
            TargetKind::OverSerious => "over_serious",
            TargetKind::PedestrianOverSerious => "pedestrian_over_serious",
        }
    }
}

impl std::str::FromStr for TargetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TargetKind::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown target `{s}`")))
    }
}

impl std::fmt::Display for TargetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Column metadata persisted next to the CSV matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub feature_names: Vec<String>,
    pub column_kinds: Vec<ColumnKind>,
    /// Observed codes per column, ascending; empty for numeric columns.
    pub categorical_levels: Vec<Vec<f64>>,
    pub target: TargetKind,
}

impl DatasetMeta {
    /// `d` numeric columns named `f0..f{d-1}`.
    pub fn numeric(d: usize, target: TargetKind) -> Self {
        DatasetMeta {
            feature_names: (0..d).map(|j| format!("f{j}")).collect(),
            column_kinds: vec![ColumnKind::Numeric; d],
            categorical_levels: vec![Vec::new(); d],
            target,
        }
    }
}

/// Model-ready matrix: `n` rows of `d` numeric features with binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub meta: DatasetMeta,
    pub row_ids: Vec<String>,
    values: Vec<f64>,
    pub labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(meta: DatasetMeta, row_ids: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        let d = meta.feature_names.len();
        if d == 0 {
            return Err(Error::Config("dataset needs at least one feature".into()));
        }
        if meta.column_kinds.len() != d || meta.categorical_levels.len() != d {
            return Err(Error::Config("column metadata width does not match feature count".into()));
        }
        if rows.len() != labels.len() || rows.len() != row_ids.len() {
            return Err(Error::LengthMismatch { left: labels.len(), right: rows.len() });
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Config(format!("label {bad} is not binary")));
        }
        let mut values = Vec::with_capacity(rows.len() * d);
        for row in &rows {
            if row.len() != d {
                return Err(Error::FeatureOutOfRange { index: row.len(), width: d });
            }
            values.extend_from_slice(row);
        }
        Ok(LabeledDataset { meta, row_ids, values, labels })
    }

    /// All-numeric dataset with row ids `0..n`.
    pub fn from_numeric(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        LabeledDataset::new(DatasetMeta::numeric(d, TargetKind::Pedestrian), ids, rows, labels)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.meta.feature_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.n_features();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_features() + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.n_features())
    }

    pub fn feature_names(&self) -> &[String] {
        &self.meta.feature_names
    }

    pub fn target(&self) -> TargetKind {
        self.meta.target
    }

    /// `[negatives, positives]`
    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.n_rows() - pos, pos]
    }

    pub fn positive_share(&self) -> f64 {
        self.class_counts()[1] as f64 / self.n_rows() as f64
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        let d = self.n_features();
        let mut values = Vec::with_capacity(indices.len() * d);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        LabeledDataset {
            meta: self.meta.clone(),
            row_ids: indices.iter().map(|&i| self.row_ids[i].clone()).collect(),
            values,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub(crate) fn push_row(&mut self, id: String, row: &[f64], label: u8) {
        debug_assert_eq!(row.len(), self.n_features());
        self.row_ids.push(id);
        self.values.extend_from_slice(row);
        self.labels.push(label);
    }

    /// FNV-1a over ids, value bits and labels. Used to prove partitions are untouched.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |bytes: &[u8]| {
            for &b in bytes {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for id in &self.row_ids {
            feed(id.as_bytes());
            feed(&[0xff]);
        }
        for v in &self.values {
            feed(&v.to_bits().to_le_bytes());
        }
        feed(&self.labels);
        h
    }

    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header = vec!["row_id".to_string()];
        header.extend(self.meta.feature_names.iter().cloned());
        header.push("label".into());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut rec = vec![self.row_ids[i].clone()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            rec.push(self.labels[i].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<csv sink>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(source: R, meta: DatasetMeta) -> Result<Self> {
        let mut r = csv::Reader::from_reader(source);
        let headers = r.headers()?.clone();
        let d = meta.feature_names.len();
        if headers.len() != d + 2 || headers.iter().skip(1).take(d).ne(meta.feature_names.iter().map(String::as_str)) {
            return Err(Error::Config("dataset CSV header does not match its sidecar".into()));
        }
        let mut ids = Vec::new();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let cell = |j: usize| -> Result<f64> {
                rec[j].parse::<f64>().map_err(|_| Error::MalformedCell {
                    row: i + 1,
                    column: headers[j].to_string(),
                    reason: format!("not a number: `{}`", &rec[j]),
                })
            };
            ids.push(rec[0].to_string());
            rows.push((1..=d).map(cell).collect::<Result<Vec<_>>>()?);
            labels.push(match &rec[d + 1] {
                "0" => 0,
                "1" => 1,
                other => {
                    return Err(Error::MalformedCell {
                        row: i + 1,
                        column: "label".into(),
                        reason: format!("label must be 0 or 1, found `{other}`"),
                    })
                }
            });
        }
        LabeledDataset::new(meta, ids, rows, labels)
    }
}

/// Ascending distinct values, as used for categorical level sets.
pub fn observed_levels(values: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let set: BTreeSet<u64> = values.into_iter().map(order_key).collect();
    set.into_iter().map(from_order_key).collect()
}

// Total-order key for finite floats.
fn order_key(v: f64) -> u64 {
    let bits = v.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

fn from_order_key(k: u64) -> f64 {
    if k >> 63 == 1 {
        f64::from_bits(k & !(1 << 63))
    } else {
        f64::from_bits(!k)
    }
}
