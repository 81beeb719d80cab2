use serde::{Deserialize, Serialize};

use super::schema::Field;

/// One police-reported collision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub collision_id: String,
    values: [i64; Field::COUNT],
    /// Easting or longitude; `None` when the source cell was unparseable.
    pub x: Option<f64>,
    pub y: Option<f64>,
}

impl CollisionRecord {
    pub fn new(collision_id: impl Into<String>) -> Self {
        CollisionRecord { collision_id: collision_id.into(), values: [0; Field::COUNT], x: None, y: None }
    }

    pub fn with(mut self, field: Field, value: i64) -> Self {
        self.set(field, value);
        self
    }

    pub fn at(mut self, x: f64, y: f64) -> Self {
        self.x = Some(x);
        self.y = Some(y);
        self
    }

    pub fn get(&self, field: Field) -> i64 {
        self.values[field.index()]
    }

    pub fn set(&mut self, field: Field, value: i64) {
        self.values[field.index()] = value;
    }

    pub fn number_of_casualties(&self) -> i64 {
        self.get(Field::NumberOfCasualties)
    }

    pub fn number_of_vehicles(&self) -> i64 {
        self.get(Field::NumberOfVehicles)
    }

    pub fn has_coordinates(&self) -> bool {
        matches!((self.x, self.y), (Some(x), Some(y)) if x.is_finite() && y.is_finite())
    }
}

/// One casualty; a collision may have several.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CasualtyRow {
    pub collision_id: String,
    pub casualty_class: i64,
    /// 1 fatal, 2 serious, 3 slight.
    pub casualty_severity: u8,
}

/// Record of one column's mode imputation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImputationLog {
    pub column: Field,
    pub replaced_count: usize,
    pub mode_value: i64,
    pub affected_row_ids: Vec<String>,
}
