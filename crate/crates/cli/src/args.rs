//! Command-line argument definitions.
//!
//! Every numeric experiment default is the full-size configuration scaled by
//! `--scale`; passing an explicit flag always wins over the scaled default.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "randepth", version, about = "Regression-tree ensembles with randomized depth budgets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Generate a synthetic regression dataset and its spec sidecar.
    Gen(GenArgs),
    /// Fit a learner to a CSV dataset and serialize the model.
    Fit(FitArgs),
    /// Predict with a serialized model on a CSV dataset.
    Predict(PredictArgs),
    /// Multi-objective (accuracy vs fit time) tuning comparison.
    Exp1(Exp1Args),
    /// Random-search tuning comparison with runtime accounting.
    Exp2(Exp2Args),
    /// Run fast internal consistency checks; exits 1 if any fail.
    Selftest(SelftestArgs),
}

#[derive(Args, Serialize)]
pub struct GenArgs {
    /// Number of rows to generate.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    /// Number of signal features.
    #[arg(long, default_value_t = 10)]
    pub p_signal: usize,

    /// Number of pure-noise features appended after the signal block.
    #[arg(long, default_value_t = 0)]
    pub p_noise: usize,

    /// Seed for drawing the generator spec (terms, centers, shapes).
    #[arg(long, default_value_t = 1)]
    pub spec_seed: u64,

    /// Seed for drawing the rows themselves.
    #[arg(long, default_value_t = 2)]
    pub data_seed: u64,

    /// Output CSV path; the spec sidecar and manifest are written next to it.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Learner {
    /// Single deterministic regression tree.
    Cart,
    /// Bagged trees: bootstrap rows, all features at every split.
    Bagging,
    /// Random forest: row sampling plus per-node feature subsets.
    Rf,
    /// Random forest with a per-tree random depth budget.
    R2f,
    /// Gradient boosting with least-squares trees.
    Mart,
    /// Gradient boosting with a per-stage random depth budget.
    Rb,
    /// Binary AdaBoost classifier over weighted trees (targets must be 0/1).
    Adaboost,
}

impl Learner {
    pub fn name(self) -> &'static str {
        match self {
            Learner::Cart => "cart",
            Learner::Bagging => "bagging",
            Learner::Rf => "rf",
            Learner::R2f => "r2f",
            Learner::Mart => "mart",
            Learner::Rb => "rb",
            Learner::Adaboost => "adaboost",
        }
    }
}

#[derive(Args, Serialize)]
pub struct FitArgs {
    /// Which learner preset to fit.
    #[arg(long, value_enum)]
    pub learner: Learner,

    /// Training data CSV (feature columns, then a final `y` column).
    #[arg(long)]
    pub data: PathBuf,

    /// Output path for the serialized model JSON.
    #[arg(long)]
    pub model: PathBuf,

    /// Ensemble size: trees for forests, stages for boosting, rounds for adaboost.
    #[arg(long)]
    pub trees: Option<usize>,

    /// Maximum tree depth (the budget ceiling when random depth is active).
    #[arg(long)]
    pub d_max: Option<usize>,

    /// Minimum rows per leaf.
    #[arg(long, default_value_t = 5)]
    pub min_leaf: usize,

    /// Fraction of features considered at each split.
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Fraction of rows sampled per tree or stage.
    #[arg(long)]
    pub lambda: Option<f64>,

    /// Boosting learning rate.
    #[arg(long)]
    pub nu: Option<f64>,

    /// Sample rows with replacement (forest learners only).
    #[arg(long)]
    pub replace: Option<bool>,

    /// Master seed for all sampling and depth draws.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Serialize)]
pub struct PredictArgs {
    /// Serialized model JSON produced by `fit`.
    #[arg(long)]
    pub model: PathBuf,

    /// Input CSV in training format; the trailing `y` column is ignored.
    #[arg(long)]
    pub data: PathBuf,

    /// Output CSV path, one prediction per input row.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct Exp1Args {
    /// Shrink factor applied to every unset size/budget flag, in (0, 1].
    #[arg(long, default_value_t = 0.1)]
    pub scale: f64,

    /// Number of independently drawn dataset specs.
    #[arg(long, default_value_t = 4)]
    pub datasets: usize,

    /// Noise-column counts; each dataset is regenerated per entry.
    #[arg(long, value_delimiter = ',', default_values_t = [0usize, 10, 20])]
    pub p_noise: Vec<usize>,

    /// Training rows per dataset (default: scaled 10000; test set is half that).
    #[arg(long)]
    pub n: Option<usize>,

    /// Search generations (default: scaled 10).
    #[arg(long)]
    pub generations: Option<usize>,

    /// Population size, forced even and at least 4 (default: scaled 80).
    #[arg(long)]
    pub population: Option<usize>,

    /// Upper bound of the tuned ensemble-size range (default: scaled 1000).
    #[arg(long)]
    pub max_trees: Option<usize>,

    /// Depth budget ceiling shared by every tuned model.
    #[arg(long, default_value_t = 5)]
    pub d_max: usize,

    /// Minimum rows per leaf shared by every tuned model.
    #[arg(long, default_value_t = 5)]
    pub min_leaf: usize,

    /// Master seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Output directory for fronts, difference tables, and the manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct Exp2Args {
    /// Shrink factor applied to every unset size/budget flag, in (0, 1].
    #[arg(long, default_value_t = 0.1)]
    pub scale: f64,

    /// Number of independently drawn datasets (default: scaled 50).
    #[arg(long)]
    pub datasets: Option<usize>,

    /// Training rows per dataset (default: scaled 10000; test set is half that).
    #[arg(long)]
    pub n: Option<usize>,

    /// Random-search draws per tuning run (default: scaled 50).
    #[arg(long)]
    pub k: Option<usize>,

    /// Fixed ensemble size for every tuned model.
    #[arg(long, default_value_t = 200)]
    pub trees: usize,

    /// Depth budget ceiling shared by every tuned model.
    #[arg(long, default_value_t = 5)]
    pub d_max: usize,

    /// Minimum rows per leaf shared by every tuned model.
    #[arg(long, default_value_t = 5)]
    pub min_leaf: usize,

    /// Cross-validation folds used inside each candidate evaluation.
    #[arg(long, default_value_t = 5)]
    pub folds: usize,

    /// Master seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Output directory for the results table, summary, and manifest.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Serialize)]
pub struct SelftestArgs {
    /// Master seed for the randomized checks.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

/// Scaled default for a count flag: `max(1, round(base * scale))`.
pub fn scaled(base: usize, scale: f64) -> usize {
    ((base as f64 * scale).round() as usize).max(1)
}

/// Scaled population size, forced even and at least 4.
pub fn scaled_population(base: usize, scale: f64) -> usize {
    let v = scaled(base, scale);
    (v + v % 2).max(4)
}

pub fn validate_scale(scale: f64) -> randepth::Result<()> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(randepth::Error::contract(format!(
            "pre: scale factor in (0, 1], got {scale}"
        )));
    }
    Ok(())
}
