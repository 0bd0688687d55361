//! Gradient-boosted decision trees for binary classification.
//!
//! * [`train_gbdt`] fits an additive model of regression trees to the logistic
//!   loss using second-order (gradient and hessian) statistics, exact greedy
//!   split search and learned default directions for missing values.
//! * [`train_ensemble`] partitions the data into 16 stratified folds and, for
//!   each fold, grid-searches hyperparameters on that fold, keeping the winner
//!   together with its F1-optimal threshold.
//! * [`EnsembleModel::predict`] averages member probabilities for the score and
//!   takes a strict majority of member votes for the decision.

mod ensemble;
mod model;
mod threshold;
mod tree;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

pub use ensemble::{
    fold_assignment, train_ensemble, EnsembleMember, EnsembleModel, EnsemblePrediction, FoldSummary,
    ENSEMBLE_SIZE, MODEL_FORMAT_VERSION,
};
pub use model::{default_threshold, log_loss, sigmoid, train_gbdt, GbdtModel};
pub use threshold::{best_threshold, f1_at, f1_from_counts, FALLBACK_THRESHOLD};
pub use tree::{Node, RegressionTree};

/// One example's features; `None` marks a missing (masked) value.
pub type FeatureRow = Vec<Option<f64>>;

pub const LEARNING_RATES: [f64; 4] = [0.1, 0.08, 0.05, 0.03];
pub const MAX_DEPTHS: [usize; 8] = [3, 4, 5, 6, 7, 8, 9, 10];
pub const NUM_ROUNDS: [usize; 7] = [100, 200, 300, 400, 500, 600, 700];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbdtHyperParams {
    pub learning_rate: f64,
    pub max_depth: usize,
    pub num_round: usize,
}

impl GbdtHyperParams {
    pub fn new(learning_rate: f64, max_depth: usize, num_round: usize) -> Self {
        Self {
            learning_rate,
            max_depth,
            num_round,
        }
    }

    /// Whether every value comes from the published search grid.
    pub fn in_search_grid(&self) -> bool {
        LEARNING_RATES.contains(&self.learning_rate)
            && MAX_DEPTHS.contains(&self.max_depth)
            && NUM_ROUNDS.contains(&self.num_round)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_depth == 0 || self.num_round == 0 {
            return Err(Error::Config("max_depth and num_round must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Regularization {
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

impl Default for Regularization {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    #[default]
    Full,
    Fast,
}

/// All 224 combinations of the published learning rates, depths and round counts.
pub fn full_grid() -> Vec<GbdtHyperParams> {
    let mut grid = Vec::with_capacity(224);
    for &lr in &LEARNING_RATES {
        for &depth in &MAX_DEPTHS {
            for &rounds in &NUM_ROUNDS {
                grid.push(GbdtHyperParams::new(lr, depth, rounds));
            }
        }
    }
    grid
}

/// A four-point corner of the full grid for quick runs.
pub fn fast_grid() -> Vec<GbdtHyperParams> {
    let mut grid = Vec::new();
    for depth in [3, 5] {
        for rounds in [100, 200] {
            grid.push(GbdtHyperParams::new(0.1, depth, rounds));
        }
    }
    grid
}

pub fn grid_for(mode: GridMode) -> Vec<GbdtHyperParams> {
    match mode {
        GridMode::Full => full_grid(),
        GridMode::Fast => fast_grid(),
    }
}

/// Seeded subsample of `budget` grid points, kept in grid order.
pub fn budget_grid(grid: &[GbdtHyperParams], budget: usize, seed_value: u64) -> Vec<GbdtHyperParams> {
    if budget >= grid.len() {
        return grid.to_vec();
    }
    let mut rng = seed::rng(seed_value, seed::GRID_BUDGET);
    let mut picked = index::sample(&mut rng, grid.len(), budget.max(1)).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| grid[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        let full = full_grid();
        assert_eq!(full.len(), 224);
        assert!(full.iter().all(GbdtHyperParams::in_search_grid));
        assert!(fast_grid().iter().all(GbdtHyperParams::in_search_grid));
        let b = budget_grid(&full, 10, 3);
        assert_eq!(b.len(), 10);
        assert_eq!(b, budget_grid(&full, 10, 3));
        assert!(!GbdtHyperParams::new(0.2, 3, 100).in_search_grid());
    }
}
