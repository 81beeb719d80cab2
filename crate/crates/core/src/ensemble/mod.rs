//! Random forests, second-order gradient boosting and grid search.

mod boosted;
mod forest;
mod grid;
mod model;

pub use boosted::{fit_boosted, weighted_log_loss, BoostParams, BoostedModel, PositiveWeight};
pub use forest::{fit_forest, ForestModel, ForestParams};
pub use grid::{
    grid_search, grid_search_cells, write_leaderboard, GridResult, GridSpec, LeaderboardEntry, SelectionMetric,
    Validation,
};
pub use model::{Model, ModelConfig, ModelFile, ModelKind, MODEL_SCHEMA_VERSION};

#[cfg(test)]
mod tests;
