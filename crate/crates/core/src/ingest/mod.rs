//! Collision and casualty ingestion: parsing, invalid-code repair,
//! outlier removal and the synthetic data generator.

mod clean;
mod parse;
mod record;
mod schema;
mod synth;

pub use clean::{column_mode, drop_casualty_outliers, impute_mode, scan_invalid, InvalidScan};
pub use parse::{
    parse_casualties, parse_collisions, write_casualties, write_collisions, CasualtyLayout, CollisionLayout,
};
pub use record::{CasualtyRow, CollisionRecord, ImputationLog};
pub use schema::{default_invalid_codes, default_schema, validate_schema, ColumnKind, ColumnSchema, Field};
pub use synth::{generate_synthetic, Condition, EffectSpec, LogitModel, SynthSpec, SyntheticData, Term};
