//! Regression-tree ensembles with randomized per-tree depth budgets.
//!
//! The library covers the full pipeline around one idea: ensemble members
//! (bagged trees or boosting stages) can each draw their depth budget
//! uniformly from {1, ..., d_max} instead of sharing the maximum, which
//! cuts fitted splits roughly in half at equal member counts. On top of the
//! tree, forest, and boosting learners it provides a binary AdaBoost
//! classifier, a synthetic Gaussian-bump data generator with heteroscedastic
//! noise, and hyperparameter search (random search, NSGA-II, and Pareto
//! utilities) that scores candidates by held-out MSE and fit wall time.
//!
//! Everything that draws randomness takes an [`rng::RngStream`], a labeled
//! path hashed down to a generator seed, so any run, tree, stage, fold, or
//! candidate can be replayed bit for bit from its seeds and labels alone.

pub mod adaboost;
pub mod boost;
pub mod data;
pub mod error;
pub mod forest;
pub mod friedman;
pub mod metrics;
pub mod rng;
pub mod sampling;
pub mod tree;
pub mod tuning;

pub use adaboost::{fit_adaboost, predict_adaboost, predict_adaboost_batch, AdaBoostModel};
pub use boost::{fit_boost, predict_boost, predict_boost_batch, staged_predict, BoostConfig, BoostModel};
pub use data::Dataset;
pub use error::{Error, Result};
pub use forest::{
    expected_relative_splits, fit_forest, predict_forest, predict_forest_batch, ForestConfig,
    ForestModel,
};
pub use friedman::{evaluate_signal, generate, sample_spec, FriedmanSpec, GeneratedData};
pub use metrics::mse;
pub use rng::RngStream;
pub use tree::{RegressionTree, TreeConfig};
