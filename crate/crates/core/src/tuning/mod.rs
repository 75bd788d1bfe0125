//! Hyperparameter search machinery: parameter spaces, candidate evaluation
//! with subsampling cross-validation and fit-runtime capture, nondominated
//! filtering, single-objective random search, the NSGA-II multi-objective
//! search, and the tune-with-random-depth / refit-without protocol.
//!
//! Searches treat the evaluator as a black box returning a pair of
//! objectives to minimize: mean held-out MSE and fit wall time in seconds.
//! Every candidate records the stream its evaluation drew from, so a run
//! can be replayed bit for bit (wall-clock fields aside).

mod nsga2;

pub use nsga2::{nsga2, pareto_ranks, Nsga2Config, Nsga2Outcome};

use crate::boost::{fit_boost, predict_boost_batch, BoostConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{fit_forest, predict_forest_batch, ForestConfig};
use crate::metrics::mse;
use crate::rng::RngStream;
use crate::sampling::subsample_folds;
use crate::tree::TreeConfig;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Bool(bool),
}

impl ParamValue {
    pub fn as_int(&self) -> Result<i64> {
        match self {
            ParamValue::Int(v) => Ok(*v),
            other => Err(Error::contract(format!("expected integer, got {}", other))),
        }
    }

    pub fn as_real(&self) -> Result<f64> {
        match self {
            ParamValue::Real(v) => Ok(*v),
            other => Err(Error::contract(format!("expected real, got {}", other))),
        }
    }

    pub fn as_bool(&self) -> Result<bool> {
        match self {
            ParamValue::Bool(v) => Ok(*v),
            other => Err(Error::contract(format!("expected boolean, got {}", other))),
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{}", v),
            ParamValue::Real(v) => write!(f, "{}", v),
            ParamValue::Bool(v) => write!(f, "{}", v),
        }
    }
}

/// Named parameter assignment, ordered by name.
pub type Params = BTreeMap<String, ParamValue>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ParamKind {
    /// Inclusive on both ends.
    IntRange { lo: i64, hi: i64 },
    IntervalReal { lo: f64, hi: f64 },
    Boolean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
}

impl ParamSpec {
    pub fn int(name: &str, lo: i64, hi: i64) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::IntRange { lo, hi },
        }
    }

    pub fn real(name: &str, lo: f64, hi: f64) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::IntervalReal { lo, hi },
        }
    }

    pub fn boolean(name: &str) -> Self {
        ParamSpec {
            name: name.to_string(),
            kind: ParamKind::Boolean,
        }
    }
}

/// An ordered collection of parameter descriptors. The declaration order is
/// the genome order used by the evolutionary search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    specs: Vec<ParamSpec>,
}

impl ParamSpace {
    pub fn new(specs: Vec<ParamSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::contract("parameter space must not be empty"));
        }
        for (i, spec) in specs.iter().enumerate() {
            if specs[..i].iter().any(|s| s.name == spec.name) {
                return Err(Error::contract(format!("duplicate parameter {}", spec.name)));
            }
            match spec.kind {
                ParamKind::IntRange { lo, hi } => {
                    if lo > hi {
                        return Err(Error::contract(format!("empty range for {}", spec.name)));
                    }
                }
                ParamKind::IntervalReal { lo, hi } => {
                    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                        return Err(Error::contract(format!(
                            "bad interval [{}, {}] for {}",
                            lo, hi, spec.name
                        )));
                    }
                }
                ParamKind::Boolean => {}
            }
        }
        Ok(ParamSpace { specs })
    }

    pub fn specs(&self) -> &[ParamSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    /// One uniform draw per dimension, in declaration order.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Params {
        self.specs
            .iter()
            .map(|spec| {
                let value = match spec.kind {
                    ParamKind::IntRange { lo, hi } => ParamValue::Int(rng.random_range(lo..=hi)),
                    ParamKind::IntervalReal { lo, hi } => {
                        ParamValue::Real(rng.random_range(lo..=hi))
                    }
                    ParamKind::Boolean => ParamValue::Bool(rng.random()),
                };
                (spec.name.clone(), value)
            })
            .collect()
    }
}

/// The two minimized quantities: mean held-out MSE and fit wall time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objectives {
    pub mse: f64,
    pub fit_seconds: f64,
}

impl Objectives {
    /// Pareto dominance: no worse in both objectives, strictly better in at
    /// least one.
    pub fn dominates(&self, other: &Objectives) -> bool {
        self.mse <= other.mse
            && self.fit_seconds <= other.fit_seconds
            && (self.mse < other.mse || self.fit_seconds < other.fit_seconds)
    }

    pub fn is_valid(&self) -> bool {
        self.mse.is_finite() && self.mse >= 0.0 && self.fit_seconds.is_finite() && self.fit_seconds >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: Params,
    pub objectives: Objectives,
    /// Draw index (random search) or generation (evolutionary search).
    pub provenance: u32,
    /// Stream the evaluation drew from; replaying it reproduces the MSE.
    pub eval_stream: RngStream,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ParetoFront {
    /// Ascending by fit_seconds, hence strictly descending by mse.
    pub members: Vec<Candidate>,
}

/// Keep exactly the nondominated candidates. Candidates with identical
/// objectives keep only the earliest by input order. Members come back
/// sorted ascending by runtime.
pub fn nondominated_filter(candidates: &[Candidate]) -> ParetoFront {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| {
        let (oa, ob) = (&candidates[a].objectives, &candidates[b].objectives);
        oa.fit_seconds
            .total_cmp(&ob.fit_seconds)
            .then(oa.mse.total_cmp(&ob.mse))
            .then(a.cmp(&b))
    });
    let mut members = Vec::new();
    let mut best_mse = f64::INFINITY;
    for idx in order {
        let o = &candidates[idx].objectives;
        // Sorted by runtime then mse, a candidate is nondominated exactly
        // when it strictly improves the best mse seen so far; an exact
        // objective duplicate fails the strict test and is dropped, which
        // keeps the first occurrence only.
        if o.mse < best_mse {
            best_mse = o.mse;
            members.push(candidates[idx].clone());
        }
    }
    ParetoFront { members }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LearnerKind {
    Forest,
    Boost,
}

/// Repeated-subsampling cross-validation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvScheme {
    pub folds: usize,
    pub train_fraction: f64,
}

impl Default for CvScheme {
    fn default() -> Self {
        CvScheme {
            folds: 5,
            train_fraction: 2.0 / 3.0,
        }
    }
}

fn int_param(params: &Params, name: &str, default: i64) -> Result<i64> {
    params.get(name).map_or(Ok(default), |v| v.as_int())
}

fn real_param(params: &Params, name: &str, default: f64) -> Result<f64> {
    params.get(name).map_or(Ok(default), |v| v.as_real())
}

fn bool_param(params: &Params, name: &str, default: bool) -> Result<bool> {
    params.get(name).map_or(Ok(default), |v| v.as_bool())
}

fn count_param(params: &Params, name: &str, default: i64) -> Result<usize> {
    let v = int_param(params, name, default)?;
    usize::try_from(v).map_err(|_| Error::contract(format!("{} must be nonnegative, got {}", name, v)))
}

fn tree_config_from_params(params: &Params) -> Result<TreeConfig> {
    Ok(TreeConfig {
        max_depth: count_param(params, "max_depth", 5)?,
        min_leaf_size: count_param(params, "min_leaf_size", 5)?,
        feature_fraction: real_param(params, "feature_fraction", 1.0)?,
    })
}

/// Build a forest config from named parameters. Missing keys fall back to
/// defaults: n_trees 100, max_depth 5, min_leaf_size 5, feature_fraction 1,
/// obs_fraction 1, with_replacement true, random_depth false.
pub fn forest_config_from_params(params: &Params, seed: u64) -> Result<ForestConfig> {
    let config = ForestConfig {
        n_trees: count_param(params, "n_trees", 100)?,
        tree: tree_config_from_params(params)?,
        obs_fraction: real_param(params, "obs_fraction", 1.0)?,
        with_replacement: bool_param(params, "with_replacement", true)?,
        random_depth: bool_param(params, "random_depth", false)?,
        seed,
    };
    config.validate()?;
    Ok(config)
}

/// Build a boosting config from named parameters. Missing keys fall back to
/// defaults: n_iterations 100, learning_rate 0.1, max_depth 5,
/// min_leaf_size 5, feature_fraction 1, obs_fraction 1, random_depth false.
pub fn boost_config_from_params(params: &Params, seed: u64) -> Result<BoostConfig> {
    let config = BoostConfig {
        n_iterations: count_param(params, "n_iterations", 100)?,
        learning_rate: real_param(params, "learning_rate", 0.1)?,
        obs_fraction: real_param(params, "obs_fraction", 1.0)?,
        tree: tree_config_from_params(params)?,
        random_depth: bool_param(params, "random_depth", false)?,
        seed,
    };
    config.validate()?;
    Ok(config)
}

/// Score one parameter assignment by repeated-subsampling CV: per fold, fit
/// on the train split (seed derived from the fold's stream label) and score
/// MSE on the held-out split. Objectives are the mean fold MSE and the
/// summed fold fit wall times; split shuffling and prediction time are
/// excluded from the runtime objective.
pub fn evaluate_candidate(
    learner: LearnerKind,
    params: &Params,
    data: &Dataset,
    scheme: &CvScheme,
    stream: &RngStream,
) -> Result<Objectives> {
    let mut fold_rng = stream.child("folds").rng();
    let folds = subsample_folds(data.n_rows(), scheme.folds, scheme.train_fraction, &mut fold_rng)?;
    let mut total_mse = 0.0;
    let mut fit_seconds = 0.0;
    for (f, (train_split, test_split)) in folds.iter().enumerate() {
        let train = data.select_rows(&train_split.indices)?;
        let test = data.select_rows(&test_split.indices)?;
        let seed = stream.child("fit").child(f).derive_seed();
        let predictions = match learner {
            LearnerKind::Forest => {
                let config = forest_config_from_params(params, seed)?;
                let model = fit_forest(&train, &config);
                fit_seconds += model.fit_stats.wall_time_s;
                predict_forest_batch(&model, &test)
            }
            LearnerKind::Boost => {
                let config = boost_config_from_params(params, seed)?;
                let model = fit_boost(&train, &config);
                fit_seconds += model.fit_stats.wall_time_s;
                predict_boost_batch(&model, &test)
            }
        };
        total_mse += mse(&predictions, test.target())?;
    }
    Ok(Objectives {
        mse: total_mse / folds.len() as f64,
        fit_seconds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSearchOutcome {
    /// Index into `candidates` of the lowest-MSE candidate (ties resolve to
    /// the earliest draw).
    pub best_index: usize,
    pub candidates: Vec<Candidate>,
    /// Draws whose evaluation failed, with the reason.
    pub skipped: Vec<(u32, String)>,
    pub total_seconds: f64,
}

impl RandomSearchOutcome {
    pub fn best(&self) -> &Candidate {
        &self.candidates[self.best_index]
    }
}

/// Uniform random search: k independent draws from the space, each scored by
/// the evaluator with its own derived stream. Returns every scored candidate
/// plus the best by MSE.
pub fn random_search<F>(
    space: &ParamSpace,
    mut evaluator: F,
    k: usize,
    stream: &RngStream,
) -> Result<RandomSearchOutcome>
where
    F: FnMut(&Params, &RngStream) -> Result<Objectives>,
{
    if k == 0 {
        return Err(Error::contract("random search needs at least one draw"));
    }
    let start = Instant::now();
    let mut candidates = Vec::with_capacity(k);
    let mut skipped = Vec::new();
    for i in 0..k {
        let params = space.sample(&mut stream.child("draw").child(i).rng());
        let eval_stream = stream.child("cand").child(i);
        match evaluator(&params, &eval_stream) {
            Ok(objectives) if objectives.is_valid() => candidates.push(Candidate {
                params,
                objectives,
                provenance: i as u32,
                eval_stream,
            }),
            Ok(objectives) => skipped.push((
                i as u32,
                format!("invalid objectives ({}, {})", objectives.mse, objectives.fit_seconds),
            )),
            Err(e) => skipped.push((i as u32, e.to_string())),
        }
    }
    if candidates.is_empty() {
        return Err(Error::contract(format!(
            "all {} random-search candidates failed evaluation",
            k
        )));
    }
    let mut best_index = 0;
    for (i, c) in candidates.iter().enumerate() {
        if c.objectives.mse < candidates[best_index].objectives.mse {
            best_index = i;
        }
    }
    Ok(RandomSearchOutcome {
        best_index,
        candidates,
        skipped,
        total_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone)]
pub struct HybridOutcome {
    pub search: RandomSearchOutcome,
    /// The winning draw's parameters with random_depth forced off.
    pub final_params: Params,
    pub final_model: crate::forest::ForestModel,
    pub final_fit_seconds: f64,
}

/// Tune a forest by random search with randomized per-tree depths forced ON
/// during evaluation, then refit the winning parameters on the full data
/// with randomized depths OFF. The tuning search is bit-identical to a plain
/// search over the same space with the flag forced on, so the cheaper tuning
/// runs are the only behavioral difference from a standard pipeline.
pub fn hybrid_tune_fit(
    data: &Dataset,
    space: &ParamSpace,
    k: usize,
    scheme: &CvScheme,
    stream: &RngStream,
) -> Result<HybridOutcome> {
    let scheme = *scheme;
    let search = random_search(
        space,
        |params, eval_stream| {
            let mut tuned = params.clone();
            tuned.insert("random_depth".to_string(), ParamValue::Bool(true));
            evaluate_candidate(LearnerKind::Forest, &tuned, data, &scheme, eval_stream)
        },
        k,
        &stream.child("search"),
    )?;
    let mut final_params = search.best().params.clone();
    final_params.insert("random_depth".to_string(), ParamValue::Bool(false));
    let config = forest_config_from_params(&final_params, stream.child("final").derive_seed())?;
    let final_model = fit_forest(data, &config);
    let final_fit_seconds = final_model.fit_stats.wall_time_s;
    Ok(HybridOutcome {
        search,
        final_params,
        final_model,
        final_fit_seconds,
    })
}

/// Render candidates as CSV: provenance, the space's parameters in
/// declaration order, both objectives, Pareto rank, and front membership.
pub fn candidates_csv(space: &ParamSpace, candidates: &[Candidate]) -> String {
    let objectives: Vec<Objectives> = candidates.iter().map(|c| c.objectives).collect();
    let ranks = pareto_ranks(&objectives);
    let mut out = String::from("provenance");
    for spec in space.specs() {
        out.push(',');
        out.push_str(&spec.name);
    }
    out.push_str(",mse,fit_seconds,rank,on_front\n");
    for (c, rank) in candidates.iter().zip(&ranks) {
        out.push_str(&c.provenance.to_string());
        for spec in space.specs() {
            out.push(',');
            match c.params.get(&spec.name) {
                Some(v) => out.push_str(&v.to_string()),
                None => out.push_str("NA"),
            }
        }
        out.push_str(&format!(
            ",{},{},{},{}\n",
            c.objectives.mse,
            c.objectives.fit_seconds,
            rank,
            u8::from(*rank == 0)
        ));
    }
    out
}
