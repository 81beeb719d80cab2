use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coded fields carried by a [`CollisionRecord`](super::CollisionRecord).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    NumberOfVehicles,
    NumberOfCasualties,
    DayOfWeek,
    NearestHour,
    RoadType,
    SpeedLimit,
    JunctionControl,
    JunctionDetail,
    LightConditions,
    WeatherConditions,
    RoadSurfaceConditions,
    PoliceAttendance,
    HumanControlCrossing,
}

impl Field {
    pub const COUNT: usize = 13;

    pub const ALL: [Field; Field::COUNT] = [
        Field::NumberOfVehicles,
        Field::NumberOfCasualties,
        Field::DayOfWeek,
        Field::NearestHour,
        Field::RoadType,
        Field::SpeedLimit,
        Field::JunctionControl,
        Field::JunctionDetail,
        Field::LightConditions,
        Field::WeatherConditions,
        Field::RoadSurfaceConditions,
        Field::PoliceAttendance,
        Field::HumanControlCrossing,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::NumberOfVehicles => "number_of_vehicles",
            Field::NumberOfCasualties => "number_of_casualties",
            Field::DayOfWeek => "day_of_week",
            Field::NearestHour => "nearest_hour",
            Field::RoadType => "road_type",
            Field::SpeedLimit => "speed_limit",
            Field::JunctionControl => "junction_control",
            Field::JunctionDetail => "junction_detail",
            Field::LightConditions => "light_conditions",
            Field::WeatherConditions => "weather_conditions",
            Field::RoadSurfaceConditions => "road_surface_conditions",
            Field::PoliceAttendance => "police_attendance",
            Field::HumanControlCrossing => "human_control_crossing",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Field::ALL.iter().copied().find(|f| f.name() == s).ok_or_else(|| Error::UnknownFeature(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Declares how one input column is read and which of its codes are valid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub name: Field,
    /// Header in the source file; defaults to the field name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<String>,
    pub kind: ColumnKind,
    #[serde(default)]
    pub valid_codes: BTreeSet<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub numeric_range: Option<(i64, i64)>,
    #[serde(default = "default_invalid_codes")]
    pub invalid_codes: BTreeSet<i64>,
}

pub fn default_invalid_codes() -> BTreeSet<i64> {
    [-1, 99].into_iter().collect()
}

impl ColumnSchema {
    pub fn categorical(name: Field, codes: &[i64]) -> Self {
        ColumnSchema {
            name,
            header: None,
            kind: ColumnKind::Categorical,
            valid_codes: codes.iter().copied().collect(),
            numeric_range: None,
            invalid_codes: default_invalid_codes(),
        }
    }

    pub fn numeric(name: Field, min: i64, max: i64) -> Self {
        ColumnSchema {
            name,
            header: None,
            kind: ColumnKind::Numeric,
            valid_codes: BTreeSet::new(),
            numeric_range: Some((min, max)),
            invalid_codes: default_invalid_codes(),
        }
    }

    pub fn header(&self) -> &str {
        self.header.as_deref().unwrap_or(self.name.name())
    }

    /// A cell is invalid when it carries an invalid code, or, for
    /// categorical columns, a code outside the valid set.
    pub fn is_invalid(&self, value: i64) -> bool {
        self.invalid_codes.contains(&value)
            || (self.kind == ColumnKind::Categorical && !self.valid_codes.contains(&value))
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ColumnKind::Categorical => {
                if self.valid_codes.is_empty() {
                    return Err(Error::Config(format!("categorical column `{}` has no valid codes", self.name)));
                }
                if let Some(code) = self.valid_codes.intersection(&self.invalid_codes).next() {
                    return Err(Error::Config(format!(
                        "column `{}`: code {code} is both valid and invalid",
                        self.name
                    )));
                }
            }
            ColumnKind::Numeric => match self.numeric_range {
                Some((lo, hi)) if lo <= hi => {}
                Some((lo, hi)) => {
                    return Err(Error::Config(format!("column `{}`: numeric range [{lo}, {hi}] is empty", self.name)))
                }
                None => return Err(Error::Config(format!("numeric column `{}` needs a numeric_range", self.name))),
            },
        }
        Ok(())
    }
}

/// Validates a whole schema: every column valid, no field listed twice.
pub fn validate_schema(schema: &[ColumnSchema]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for col in schema {
        col.validate()?;
        if !seen.insert(col.name) {
            return Err(Error::Config(format!("column `{}` listed twice", col.name)));
        }
    }
    Ok(())
}

/// Default schema: code sets and ranges of the 2023 collision file.
pub fn default_schema() -> Vec<ColumnSchema> {
    use Field::*;
    vec![
        ColumnSchema::numeric(NumberOfVehicles, 1, 17),
        ColumnSchema::numeric(NumberOfCasualties, 1, 19),
        ColumnSchema::numeric(DayOfWeek, 1, 7),
        ColumnSchema::numeric(NearestHour, 0, 24),
        ColumnSchema::categorical(RoadType, &[1, 2, 3, 6, 7, 9]),
        ColumnSchema::numeric(SpeedLimit, 0, 70),
        ColumnSchema::categorical(JunctionControl, &[1, 2, 3, 4]),
        ColumnSchema::categorical(JunctionDetail, &[0, 1, 2, 3, 5, 6, 7, 8, 9]),
        ColumnSchema::categorical(LightConditions, &[1, 4, 5, 6, 7]),
        ColumnSchema::categorical(WeatherConditions, &[1, 2, 3, 4, 5, 6, 7, 8, 9]),
        ColumnSchema::categorical(RoadSurfaceConditions, &[1, 2, 3, 4, 5]),
        ColumnSchema::categorical(PoliceAttendance, &[1, 2, 3]),
        ColumnSchema::categorical(HumanControlCrossing, &[0, 1, 2]),
    ]
}
