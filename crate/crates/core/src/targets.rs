//! Target construction from casualty rows and encoding into a [`LabeledDataset`].

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dataset::{observed_levels, DatasetMeta, LabeledDataset, TargetKind};
use crate::error::{Error, Result};
use crate::ingest::{CasualtyRow, CollisionRecord, ColumnKind, ColumnSchema, Field};

pub type FlagMap = BTreeMap<String, u8>;

/// 1 iff any casualty of the collision has the pedestrian class. Collisions
/// without casualty rows get 0 and are returned in the second list.
pub fn build_pedestrian_flag(
    collisions: &[CollisionRecord],
    casualties: &[CasualtyRow],
    pedestrian_class: i64,
) -> (FlagMap, Vec<String>) {
    let mut any_ped: HashMap<&str, bool> = HashMap::new();
    for c in casualties {
        *any_ped.entry(c.collision_id.as_str()).or_default() |= c.casualty_class == pedestrian_class;
    }
    let mut missing = Vec::new();
    let flags = collisions
        .iter()
        .map(|r| {
            let flag = match any_ped.get(r.collision_id.as_str()) {
                Some(&p) => u8::from(p),
                None => {
                    missing.push(r.collision_id.clone());
                    0
                }
            };
            (r.collision_id.clone(), flag)
        })
        .collect();
    (flags, missing)
}

/// 1 iff the collision's most severe casualty is fatal or serious.
pub fn build_over_serious(casualties: &[CasualtyRow]) -> FlagMap {
    let mut worst: BTreeMap<String, u8> = BTreeMap::new();
    for c in casualties {
        let w = worst.entry(c.collision_id.clone()).or_insert(c.casualty_severity);
        *w = (*w).min(c.casualty_severity);
    }
    worst.into_iter().map(|(k, s)| (k, u8::from(s <= 2))).collect()
}

/// Pointwise product of two flag maps with identical key sets.
pub fn build_interaction(ped: &FlagMap, over_serious: &FlagMap) -> Result<FlagMap> {
    if let Some(k) = ped.keys().find(|k| !over_serious.contains_key(*k)) {
        return Err(Error::KeyMismatch(k.clone()));
    }
    if let Some(k) = over_serious.keys().find(|k| !ped.contains_key(*k)) {
        return Err(Error::KeyMismatch(k.clone()));
    }
    Ok(ped.iter().map(|(k, &p)| (k.clone(), p * over_serious[k])).collect())
}

/// All three targets aligned to the collision list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetTable {
    pub collision_ids: Vec<String>,
    pub pedestrian: Vec<u8>,
    pub over_serious: Vec<u8>,
    pub pedestrian_over_serious: Vec<u8>,
    /// Collisions with no casualty rows; their flags default to 0.
    pub without_casualties: Vec<String>,
}

impl TargetTable {
    pub fn build(collisions: &[CollisionRecord], casualties: &[CasualtyRow], pedestrian_class: i64) -> Result<Self> {
        let (ped, missing) = build_pedestrian_flag(collisions, casualties, pedestrian_class);
        if !missing.is_empty() {
            log::warn!("{} collisions have no casualty rows; their flags default to 0", missing.len());
        }
        let sev_all = build_over_serious(casualties);
        let sev: FlagMap = ped.keys().map(|k| (k.clone(), sev_all.get(k).copied().unwrap_or(0))).collect();
        let inter = build_interaction(&ped, &sev)?;
        let ids: Vec<String> = collisions.iter().map(|r| r.collision_id.clone()).collect();
        let pick = |m: &FlagMap| ids.iter().map(|k| m[k]).collect::<Vec<u8>>();
        Ok(TargetTable {
            pedestrian: pick(&ped),
            over_serious: pick(&sev),
            pedestrian_over_serious: pick(&inter),
            collision_ids: ids,
            without_casualties: missing,
        })
    }

    pub fn labels(&self, target: TargetKind) -> &[u8] {
        match target {
            TargetKind::Pedestrian => &self.pedestrian,
            TargetKind::OverSerious => &self.over_serious,
            TargetKind::PedestrianOverSerious => &self.pedestrian_over_serious,
        }
    }

    pub fn len(&self) -> usize {
        self.collision_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.collision_ids.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["collision_id", "pedestrian", "over_serious", "pedestrian_over_serious"])?;
        for i in 0..self.len() {
            w.write_record([
                self.collision_ids[i].clone(),
                self.pedestrian[i].to_string(),
                self.over_serious[i].to_string(),
                self.pedestrian_over_serious[i].to_string(),
            ])?;
        }
        w.flush().map_err(|e| Error::io("<csv sink>", e))?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(source: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(source);
        let mut t = TargetTable {
            collision_ids: vec![],
            pedestrian: vec![],
            over_serious: vec![],
            pedestrian_over_serious: vec![],
            without_casualties: vec![],
        };
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let flag = |j: usize, col: &str| match rec.get(j) {
                Some("0") => Ok(0u8),
                Some("1") => Ok(1u8),
                other => Err(Error::MalformedCell {
                    row: i + 1,
                    column: col.into(),
                    reason: format!("expected 0 or 1, found {other:?}"),
                }),
            };
            t.collision_ids.push(rec.get(0).unwrap_or_default().to_string());
            t.pedestrian.push(flag(1, "pedestrian")?);
            t.over_serious.push(flag(2, "over_serious")?);
            t.pedestrian_over_serious.push(flag(3, "pedestrian_over_serious")?);
        }
        Ok(t)
    }
}

/// Table-2 style counts. Everything is per collision except
/// `casualty_severity`, which counts casualty rows.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marginals {
    pub collisions: usize,
    pub pedestrian: [usize; 2],
    pub over_serious: [usize; 2],
    pub pedestrian_over_serious: [usize; 2],
    /// Casualty rows by severity: fatal, serious, slight.
    pub casualty_severity: [usize; 3],
    /// Collisions by their worst casualty: fatal, serious, slight.
    pub worst_severity: [usize; 3],
    pub collisions_without_casualties: usize,
}

impl Marginals {
    pub fn compute(targets: &TargetTable, casualties: &[CasualtyRow]) -> Self {
        let split = |v: &[u8]| {
            let ones = v.iter().filter(|&&x| x == 1).count();
            [v.len() - ones, ones]
        };
        let mut sev = [0usize; 3];
        for c in casualties {
            sev[usize::from(c.casualty_severity - 1)] += 1;
        }
        let kept: std::collections::HashSet<&str> = targets.collision_ids.iter().map(String::as_str).collect();
        let mut worst: std::collections::HashMap<&str, u8> = std::collections::HashMap::new();
        for c in casualties.iter().filter(|c| kept.contains(c.collision_id.as_str())) {
            let w = worst.entry(c.collision_id.as_str()).or_insert(3);
            *w = (*w).min(c.casualty_severity);
        }
        let mut worst_severity = [0usize; 3];
        for w in worst.values() {
            worst_severity[usize::from(w - 1)] += 1;
        }
        Marginals {
            collisions: targets.len(),
            worst_severity,
            pedestrian: split(&targets.pedestrian),
            over_serious: split(&targets.over_serious),
            pedestrian_over_serious: split(&targets.pedestrian_over_serious),
            casualty_severity: sev,
            collisions_without_casualties: targets.without_casualties.len(),
        }
    }
}

/// Encodes records into a matrix with integer codes carried as numbers.
pub fn encode(
    collisions: &[CollisionRecord],
    targets: &TargetTable,
    target: TargetKind,
    features: &[Field],
    schema: &[ColumnSchema],
) -> Result<LabeledDataset> {
    let kinds = features
        .iter()
        .map(|f| {
            schema.iter().find(|c| c.name == *f).map(|c| c.kind).ok_or_else(|| Error::UnknownFeature(f.to_string()))
        })
        .collect::<Result<Vec<ColumnKind>>>()?;
    if features.is_empty() {
        return Err(Error::Config("feature list is empty".into()));
    }
    if targets.len() != collisions.len() {
        return Err(Error::LengthMismatch { left: targets.len(), right: collisions.len() });
    }
    if let Some((r, _)) = collisions.iter().zip(&targets.collision_ids).find(|(r, id)| &r.collision_id != *id) {
        return Err(Error::KeyMismatch(r.collision_id.clone()));
    }
    let rows: Vec<Vec<f64>> = collisions.iter().map(|r| features.iter().map(|&f| r.get(f) as f64).collect()).collect();
    let levels = kinds
        .iter()
        .enumerate()
        .map(|(j, k)| match k {
            ColumnKind::Categorical => observed_levels(rows.iter().map(|r| r[j])),
            ColumnKind::Numeric => Vec::new(),
        })
        .collect();
    let meta = DatasetMeta {
        feature_names: features.iter().map(|f| f.name().to_string()).collect(),
        column_kinds: kinds,
        categorical_levels: levels,
        target,
    };
    LabeledDataset::new(meta, targets.collision_ids.clone(), rows, targets.labels(target).to_vec())
}
