//! `fit`: resolve a learner preset, fit it, and serialize the model.
//!
//! Presets fill in family-appropriate defaults; any flag the user passes
//! wins. `cart` pins the flags that would break its single-deterministic-tree
//! contract (one tree, all rows, all features, no resampling).

use std::time::Instant;

use randepth::{
    fit_adaboost, fit_boost, fit_forest, mse, BoostConfig, Dataset, ForestConfig, Result,
    TreeConfig,
};

use crate::args::{FitArgs, Learner};
use crate::manifest::ManifestWriter;
use crate::models::ModelFile;

fn tree_config(args: &FitArgs, d_max: usize, kappa: f64) -> TreeConfig {
    TreeConfig {
        max_depth: args.d_max.unwrap_or(d_max),
        min_leaf_size: args.min_leaf,
        feature_fraction: args.kappa.unwrap_or(kappa),
    }
}

fn forest_config(args: &FitArgs, trees: usize, kappa: f64, replace: bool, random_depth: bool) -> ForestConfig {
    ForestConfig {
        n_trees: args.trees.unwrap_or(trees),
        tree: tree_config(args, 5, kappa),
        obs_fraction: args.lambda.unwrap_or(1.0),
        with_replacement: args.replace.unwrap_or(replace),
        random_depth,
        seed: args.seed,
    }
}

fn boost_config(args: &FitArgs, random_depth: bool) -> BoostConfig {
    BoostConfig {
        n_iterations: args.trees.unwrap_or(100),
        learning_rate: args.nu.unwrap_or(0.1),
        obs_fraction: args.lambda.unwrap_or(1.0),
        tree: tree_config(args, 5, 1.0),
        random_depth,
        seed: args.seed,
    }
}

fn fit_model(args: &FitArgs, data: &Dataset) -> Result<ModelFile> {
    Ok(match args.learner {
        Learner::Cart => {
            let config = ForestConfig {
                n_trees: 1,
                tree: tree_config(args, 5, 1.0),
                obs_fraction: 1.0,
                with_replacement: false,
                random_depth: false,
                seed: args.seed,
            };
            config.validate()?;
            ModelFile::Forest(fit_forest(data, &config))
        }
        Learner::Bagging => {
            let config = forest_config(args, 100, 1.0, true, false);
            config.validate()?;
            ModelFile::Forest(fit_forest(data, &config))
        }
        Learner::Rf => {
            let config = forest_config(args, 100, 1.0 / 3.0, true, false);
            config.validate()?;
            ModelFile::Forest(fit_forest(data, &config))
        }
        Learner::R2f => {
            let config = forest_config(args, 100, 1.0 / 3.0, true, true);
            config.validate()?;
            ModelFile::Forest(fit_forest(data, &config))
        }
        Learner::Mart => {
            let config = boost_config(args, false);
            config.validate()?;
            ModelFile::Boost(fit_boost(data, &config))
        }
        Learner::Rb => {
            let config = boost_config(args, true);
            config.validate()?;
            ModelFile::Boost(fit_boost(data, &config))
        }
        Learner::Adaboost => {
            let rounds = args.trees.unwrap_or(50);
            let stump = tree_config(args, 1, 1.0);
            ModelFile::AdaBoost(fit_adaboost(data, rounds, &stump)?)
        }
    })
}

pub fn run(args: &FitArgs) -> Result<()> {
    let mut manifest = ManifestWriter::new("fit", serde_json::to_value(args)?);
    manifest.seed("seed", args.seed);

    let data = Dataset::read_csv(&args.data)?;
    let start = Instant::now();
    let model = fit_model(args, &data)?;
    let fit_seconds = start.elapsed().as_secs_f64();

    model.save(&args.model)?;
    manifest.output(&args.model);
    manifest.write(&args.model.with_extension("manifest.json"))?;

    match &model {
        ModelFile::Forest(m) => {
            let train_mse = mse(&model.predict_batch(&data), data.target())?;
            println!("learner={}", args.learner.name());
            println!("train_mse={}", train_mse);
            println!("total_splits={}", m.fit_stats.total_splits);
            println!("fit_seconds={}", fit_seconds);
        }
        ModelFile::Boost(m) => {
            let train_mse = mse(&model.predict_batch(&data), data.target())?;
            println!("learner={}", args.learner.name());
            println!("train_mse={}", train_mse);
            println!("total_splits={}", m.fit_stats.total_splits);
            println!("fit_seconds={}", fit_seconds);
        }
        ModelFile::AdaBoost(m) => {
            let preds = model.predict_batch(&data);
            let errors = preds
                .iter()
                .zip(data.target())
                .filter(|(p, y)| *p != *y)
                .count();
            let total_splits: usize = m.stages.iter().map(|s| s.tree.count_splits()).sum();
            println!("learner={}", args.learner.name());
            println!("train_error_rate={}", errors as f64 / data.n_rows() as f64);
            println!("stages={}", m.stages.len());
            println!("total_splits={}", total_splits);
            println!("fit_seconds={}", fit_seconds);
        }
    }
    Ok(())
}
