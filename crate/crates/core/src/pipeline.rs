//! Glue for the ingest → clean → targets → encode sequence.

use serde::{Deserialize, Serialize};

use crate::dataset::{LabeledDataset, TargetKind};
use crate::error::Result;
use crate::ingest::{
    drop_casualty_outliers, generate_synthetic, impute_mode, scan_invalid, CasualtyRow, CollisionRecord, ColumnSchema,
    Field, ImputationLog, InvalidScan, SynthSpec,
};
use crate::targets::{encode, Marginals, TargetTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CleanOptions {
    /// Collisions with more casualties than this are dropped; `None` keeps all.
    pub max_casualties: Option<i64>,
    /// `casualty_class` code meaning pedestrian.
    pub pedestrian_class: i64,
}

impl Default for CleanOptions {
    fn default() -> Self {
        CleanOptions { max_casualties: Some(19), pedestrian_class: 3 }
    }
}

#[derive(Clone, Debug)]
pub struct Prepared {
    pub collisions: Vec<CollisionRecord>,
    pub scan: InvalidScan,
    pub imputation: Vec<ImputationLog>,
    pub dropped_outliers: Vec<String>,
    pub targets: TargetTable,
    pub marginals: Marginals,
}

/// Scans, imputes, drops outliers and builds the three targets.
pub fn prepare(
    collisions: &[CollisionRecord],
    casualties: &[CasualtyRow],
    schema: &[ColumnSchema],
    opts: &CleanOptions,
) -> Result<Prepared> {
    let scan = scan_invalid(collisions, schema);
    let (imputed, imputation) = impute_mode(collisions, schema)?;
    let (kept, dropped_outliers) = match opts.max_casualties {
        Some(max) => drop_casualty_outliers(&imputed, max)?,
        None => (imputed, Vec::new()),
    };
    let targets = TargetTable::build(&kept, casualties, opts.pedestrian_class)?;
    let marginals = Marginals::compute(&targets, casualties);
    Ok(Prepared { collisions: kept, scan, imputation, dropped_outliers, targets, marginals })
}

impl Prepared {
    pub fn dataset(&self, target: TargetKind, features: &[Field], schema: &[ColumnSchema]) -> Result<LabeledDataset> {
        encode(&self.collisions, &self.targets, target, features, schema)
    }
}

/// Generated data carried through `prepare` and encoded on all fields.
pub fn synthetic_dataset(n: usize, seed: u64, spec: &SynthSpec, target: TargetKind) -> Result<LabeledDataset> {
    let schema = crate::ingest::default_schema();
    let data = generate_synthetic(n, seed, spec);
    let prepared = prepare(&data.collisions, &data.casualties, &schema, &CleanOptions::default())?;
    prepared.dataset(target, &Field::ALL, &schema)
}
