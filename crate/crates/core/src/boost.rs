//! Stagewise gradient boosting for squared loss, with optional randomized
//! per-stage depth budgets.
//!
//! The model starts from the response mean. Each stage computes residuals
//! against the running predictions on all rows, draws a without-replacement
//! row subsample, grows a regression tree on the subsample's residuals, and
//! adds `learning_rate * tree` to the running predictions everywhere. For
//! squared loss with mean-valued leaves the stagewise line search is
//! identically 1, so stages carry a unit multiplier. With `random_depth`
//! each stage's depth budget is drawn uniformly from {1, ..., max_depth}.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::FitStats;
use crate::rng::RngStream;
use crate::sampling::draw_sample;
use crate::tree::{grow_tree_with_targets, RegressionTree, TreeConfig};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::time::Instant;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub n_iterations: usize,
    pub learning_rate: f64,
    /// Fraction of rows subsampled (without replacement) for each stage's
    /// tree fit. Residuals are still computed on all rows.
    pub obs_fraction: f64,
    pub tree: TreeConfig,
    pub random_depth: bool,
    pub seed: u64,
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        self.tree.validate()?;
        if !(0.0..=1.0).contains(&self.learning_rate) {
            return Err(Error::contract(format!(
                "learning_rate {} outside [0, 1]",
                self.learning_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.obs_fraction) {
            return Err(Error::contract(format!(
                "obs_fraction {} outside [0, 1]",
                self.obs_fraction
            )));
        }
        if self.random_depth && self.tree.max_depth == 0 {
            return Err(Error::contract(
                "random depth draws need max_depth of at least 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostStage {
    pub tree: RegressionTree,
    /// Stagewise line-search coefficient. Identically 1 for squared loss;
    /// kept explicit so serialized models state the full update rule.
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostModel {
    /// The constant model the stages build on: the training response mean.
    pub initial_value: f64,
    pub stages: Vec<BoostStage>,
    pub config: BoostConfig,
    pub fit_stats: FitStats,
}

/// Fit a boosting model. Stage m draws its row subsample, optional depth
/// budget, and per-node feature subsets from the stream (seed, "stage", m).
pub fn fit_boost(data: &Dataset, config: &BoostConfig) -> BoostModel {
    config.validate().expect("invalid boost config");
    let start = Instant::now();
    let y = data.target();
    let n = data.n_rows();
    let initial_value = y.iter().sum::<f64>() / n as f64;
    let mut preds = vec![initial_value; n];
    let mut residuals = vec![0.0; n];
    let root = RngStream::new(config.seed);
    let mut stages = Vec::with_capacity(config.n_iterations);
    let mut total_splits = 0usize;
    for m in 0..config.n_iterations {
        let mut rng = root.child("stage").child(m).rng();
        for i in 0..n {
            residuals[i] = y[i] - preds[i];
        }
        let sample = draw_sample(n, config.obs_fraction, false, &mut rng)
            .expect("row sampling with validated config");
        let budget = if config.random_depth {
            rng.random_range(1..=config.tree.max_depth)
        } else {
            config.tree.max_depth
        };
        let tree = grow_tree_with_targets(
            data,
            &residuals,
            &sample.indices,
            &config.tree,
            budget,
            &mut rng,
        );
        for i in 0..n {
            preds[i] += config.learning_rate * tree.predict_row(data, i);
        }
        total_splits += tree.count_splits();
        stages.push(BoostStage {
            tree,
            multiplier: 1.0,
        });
    }
    BoostModel {
        initial_value,
        stages,
        config: config.clone(),
        fit_stats: FitStats {
            total_splits,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
    }
}

/// Initial value plus the learning-rate-scaled stage trees, accumulated in
/// stage order.
pub fn predict_boost(model: &BoostModel, x: &[f64]) -> f64 {
    let mut f = model.initial_value;
    for stage in &model.stages {
        f += model.config.learning_rate * stage.multiplier * stage.tree.predict(x);
    }
    f
}

pub fn predict_boost_batch(model: &BoostModel, data: &Dataset) -> Vec<f64> {
    let mut preds = vec![model.initial_value; data.n_rows()];
    for stage in &model.stages {
        for (i, p) in preds.iter_mut().enumerate() {
            *p += model.config.learning_rate * stage.multiplier * stage.tree.predict_row(data, i);
        }
    }
    preds
}

/// Predictions after 0, 1, ..., M stages: M+1 vectors, the first holding the
/// constant initial value, the last equal to `predict_boost_batch`.
pub fn staged_predict(model: &BoostModel, data: &Dataset) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(model.stages.len() + 1);
    let mut current = vec![model.initial_value; data.n_rows()];
    out.push(current.clone());
    for stage in &model.stages {
        for (i, p) in current.iter_mut().enumerate() {
            *p += model.config.learning_rate * stage.multiplier * stage.tree.predict_row(data, i);
        }
        out.push(current.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::mse;

    fn config(m: usize, nu: f64, depth: usize, seed: u64) -> BoostConfig {
        BoostConfig {
            n_iterations: m,
            learning_rate: nu,
            obs_fraction: 1.0,
            tree: TreeConfig {
                max_depth: depth,
                min_leaf_size: 1,
                feature_fraction: 1.0,
            },
            random_depth: false,
            seed,
        }
    }

    fn wave_data(seed: u64, n: usize) -> Dataset {
        let mut rng = RngStream::new(seed).child("data").rng();
        let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y: Vec<f64> = x1
            .iter()
            .zip(&x2)
            .map(|(a, b)| (2.0 * a).sin() + 0.5 * b * b)
            .collect();
        Dataset::with_default_names(vec![x1, x2], y).unwrap()
    }

    #[test]
    fn zero_stages_predict_the_mean() {
        let d = wave_data(1, 50);
        let model = fit_boost(&d, &config(0, 0.3, 3, 7));
        let mean = d.target().iter().sum::<f64>() / 50.0;
        assert_eq!(model.initial_value, mean);
        assert!(model.stages.is_empty());
        assert_eq!(predict_boost(&model, &d.row(3)), mean);
    }

    #[test]
    fn single_stump_nails_a_step_function() {
        // Residuals after the mean are [-0.5, -0.5, 0.5, 0.5]; one stump at
        // 2.5 recovers them exactly, so one full-rate stage reaches zero
        // training error.
        let d = Dataset::with_default_names(
            vec![vec![1.0, 2.0, 3.0, 4.0]],
            vec![0.0, 0.0, 1.0, 1.0],
        )
        .unwrap();
        let model = fit_boost(&d, &config(1, 1.0, 1, 0));
        let preds = predict_boost_batch(&model, &d);
        assert_eq!(preds, d.target());
        assert_eq!(mse(&preds, d.target()).unwrap(), 0.0);
    }

    #[test]
    fn staged_predict_shapes_and_final_agreement() {
        let d = wave_data(2, 80);
        let model = fit_boost(&d, &config(12, 0.4, 2, 3));
        let staged = staged_predict(&model, &d);
        assert_eq!(staged.len(), 13);
        assert!(staged[0].iter().all(|&p| p == model.initial_value));
        let full = predict_boost_batch(&model, &d);
        for i in 0..d.n_rows() {
            assert_eq!(staged[12][i].to_bits(), full[i].to_bits());
            let single = predict_boost(&model, &d.row(i));
            assert!((single - full[i]).abs() <= 1e-12);
        }
    }

    #[test]
    fn training_mse_never_increases_on_full_data() {
        let d = wave_data(3, 120);
        for &nu in &[0.1, 1.0] {
            let model = fit_boost(&d, &config(25, nu, 3, 11));
            let staged = staged_predict(&model, &d);
            let mut prev = f64::INFINITY;
            for stage_preds in &staged {
                let e = mse(stage_preds, d.target()).unwrap();
                assert!(e <= prev, "training error rose from {} to {}", prev, e);
                prev = e;
            }
        }
    }

    #[test]
    fn fit_is_deterministic_and_stage_count_exact() {
        let d = wave_data(4, 60);
        let c = BoostConfig {
            obs_fraction: 0.6,
            random_depth: true,
            ..config(15, 0.2, 3, 5)
        };
        let a = fit_boost(&d, &c);
        let b = fit_boost(&d, &c);
        assert_eq!(a.stages.len(), 15);
        assert_eq!(a.initial_value, b.initial_value);
        assert_eq!(a.stages, b.stages);
    }

    #[test]
    fn randomized_depth_splits_less_across_seeds() {
        for seed in 0..20 {
            let d = wave_data(200 + seed, 150);
            let fixed = config(20, 0.3, 4, seed);
            let randomized = BoostConfig {
                random_depth: true,
                ..fixed.clone()
            };
            let a = fit_boost(&d, &fixed);
            let b = fit_boost(&d, &randomized);
            assert!(
                b.fit_stats.total_splits < a.fit_stats.total_splits,
                "seed {}: randomized {} vs fixed {}",
                seed,
                b.fit_stats.total_splits,
                a.fit_stats.total_splits
            );
        }
    }

    #[test]
    fn stage_subsamples_are_without_replacement() {
        let d = wave_data(5, 40);
        let c = BoostConfig {
            obs_fraction: 0.5,
            ..config(1, 0.5, 2, 9)
        };
        // Reproduce stage 0's sample from its stream and check distinctness.
        let mut rng = RngStream::new(c.seed).child("stage").child(0).rng();
        let sample = draw_sample(40, 0.5, false, &mut rng).unwrap();
        let distinct: std::collections::HashSet<_> = sample.indices.iter().collect();
        assert_eq!(distinct.len(), sample.indices.len());
        assert_eq!(sample.indices.len(), 20);
        let _ = fit_boost(&d, &c);
    }

    #[test]
    fn serialization_round_trips() {
        let d = wave_data(6, 50);
        let model = fit_boost(&d, &config(5, 0.3, 2, 1));
        let json = serde_json::to_string(&model).unwrap();
        let back: BoostModel = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(config(5, 1.5, 2, 0).validate().is_err());
        assert!(
            BoostConfig {
                obs_fraction: -0.1,
                ..config(5, 0.5, 2, 0)
            }
            .validate()
            .is_err()
        );
        let mut c = config(5, 0.5, 0, 0);
        c.random_depth = true;
        assert!(c.validate().is_err());
    }
}
