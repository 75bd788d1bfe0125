//! The two benchmark experiments behind `exp1` and `exp2`.
//!
//! Both compare each learner family with and without randomized per-member
//! depth budgets on synthetic regression problems. `exp1` tunes with an
//! evolutionary multi-objective search over (test MSE, fit seconds) and
//! reports fronts plus best-MSE difference tables. `exp2` tunes by paired
//! random search under cross-validation, refits the winner on the full
//! training data, scores it on a fresh test set, and accounts for the wall
//! time of the whole tuning pass; forests additionally get the hybrid
//! pipeline (tune with random depths, final fit without).
//!
//! Within one comparison both variants share every stream label, so they see
//! identical candidate draws, folds, and fit seeds; the depth flag is the
//! only difference.

use randepth::friedman::sample_median;
use randepth::tuning::{
    boost_config_from_params, candidates_csv, evaluate_candidate, forest_config_from_params,
    hybrid_tune_fit, nsga2, random_search, CvScheme, LearnerKind, Nsga2Config, Objectives,
    ParamSpace, ParamSpec, ParamValue, Params, RandomSearchOutcome,
};
use randepth::{
    fit_boost, fit_forest, generate, mse, predict_boost_batch, predict_forest_batch, sample_spec,
    Dataset, Error, Result, RngStream,
};

use crate::args::{scaled, scaled_population, validate_scale, Exp1Args, Exp2Args};
use crate::manifest::{with_manifest_column, ManifestWriter};

const MANIFEST_NAME: &str = "manifest.json";
const P_SIGNAL: usize = 10;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Family {
    Boost,
    Forest,
}

impl Family {
    fn name(self) -> &'static str {
        match self {
            Family::Boost => "boost",
            Family::Forest => "forest",
        }
    }

    fn kind(self) -> LearnerKind {
        match self {
            Family::Boost => LearnerKind::Boost,
            Family::Forest => LearnerKind::Forest,
        }
    }
}

const FAMILIES: [Family; 2] = [Family::Boost, Family::Forest];

struct CellData {
    train: Dataset,
    test: Dataset,
}

/// Draw one problem instance: a fresh target function, a training set, and
/// an independent test set from the same function.
fn draw_cell(p_noise: usize, n: usize, test_n: usize, stream: &RngStream) -> Result<CellData> {
    let spec = sample_spec(P_SIGNAL, p_noise, &stream.child("spec"))?;
    let train = generate(&spec, n, &stream.child("train"))?;
    let test = generate(&spec, test_n, &stream.child("test"))?;
    Ok(CellData {
        train: train.dataset,
        test: test.dataset,
    })
}

/// Pinned genes keep fixed settings inside the genome, so every candidate
/// carries its complete configuration and the shared tuning machinery needs
/// no side channel.
fn pinned(name: &str, value: usize) -> ParamSpec {
    ParamSpec::int(name, value as i64, value as i64)
}

fn exp1_space(family: Family, max_trees: usize, d_max: usize, min_leaf: usize) -> Result<ParamSpace> {
    let mut specs = match family {
        Family::Boost => vec![
            ParamSpec::int("n_iterations", 1, max_trees as i64),
            ParamSpec::real("learning_rate", 0.0, 1.0),
            ParamSpec::real("obs_fraction", 0.0, 1.0),
            ParamSpec::real("feature_fraction", 0.0, 1.0),
        ],
        Family::Forest => vec![
            ParamSpec::int("n_trees", 1, max_trees as i64),
            ParamSpec::real("obs_fraction", 0.0, 1.0),
            ParamSpec::boolean("with_replacement"),
            ParamSpec::real("feature_fraction", 0.0, 1.0),
        ],
    };
    specs.push(pinned("max_depth", d_max));
    specs.push(pinned("min_leaf_size", min_leaf));
    ParamSpace::new(specs)
}

fn exp2_space(family: Family, trees: usize, d_max: usize, min_leaf: usize) -> Result<ParamSpace> {
    let mut specs = match family {
        Family::Boost => vec![
            pinned("n_iterations", trees),
            ParamSpec::real("learning_rate", 0.0, 1.0),
            ParamSpec::real("obs_fraction", 0.0, 1.0),
            ParamSpec::real("feature_fraction", 0.0, 1.0),
        ],
        Family::Forest => vec![
            pinned("n_trees", trees),
            ParamSpec::real("obs_fraction", 0.0, 1.0),
            ParamSpec::boolean("with_replacement"),
            ParamSpec::real("feature_fraction", 0.0, 1.0),
        ],
    };
    specs.push(pinned("max_depth", d_max));
    specs.push(pinned("min_leaf_size", min_leaf));
    ParamSpace::new(specs)
}

fn with_depth_flag(params: &Params, random_depth: bool) -> Params {
    let mut tuned = params.clone();
    tuned.insert("random_depth".to_string(), ParamValue::Bool(random_depth));
    tuned
}

/// Fit on the full training set and score on the held-out test set; the
/// runtime objective is the fit call alone.
fn fit_and_score(
    family: Family,
    params: &Params,
    random_depth: bool,
    train: &Dataset,
    test: &Dataset,
    eval_stream: &RngStream,
) -> Result<Objectives> {
    let seed = eval_stream.child("fit").derive_seed();
    let tuned = with_depth_flag(params, random_depth);
    let (predictions, fit_seconds) = match family {
        Family::Forest => {
            let config = forest_config_from_params(&tuned, seed)?;
            let model = fit_forest(train, &config);
            (predict_forest_batch(&model, test), model.fit_stats.wall_time_s)
        }
        Family::Boost => {
            let config = boost_config_from_params(&tuned, seed)?;
            let model = fit_boost(train, &config);
            (predict_boost_batch(&model, test), model.fit_stats.wall_time_s)
        }
    };
    Ok(Objectives {
        mse: mse(&predictions, test.target())?,
        fit_seconds,
    })
}

/// Refit `params` (with the depth flag applied) on the full training set and
/// return its test MSE.
fn final_test_mse(
    family: Family,
    params: &Params,
    random_depth: bool,
    train: &Dataset,
    test: &Dataset,
    seed: u64,
) -> Result<f64> {
    let tuned = with_depth_flag(params, random_depth);
    let predictions = match family {
        Family::Forest => {
            let config = forest_config_from_params(&tuned, seed)?;
            predict_forest_batch(&fit_forest(train, &config), test)
        }
        Family::Boost => {
            let config = boost_config_from_params(&tuned, seed)?;
            predict_boost_batch(&fit_boost(train, &config), test)
        }
    };
    mse(&predictions, test.target())
}

pub fn run_exp1(args: &Exp1Args) -> Result<()> {
    validate_scale(args.scale)?;
    if args.datasets == 0 || args.p_noise.is_empty() {
        return Err(Error::contract(
            "exp1 needs at least one dataset and one p_noise entry",
        ));
    }
    let n = args.n.unwrap_or_else(|| scaled(10_000, args.scale));
    let test_n = (n / 2).max(1);
    let generations = args.generations.unwrap_or_else(|| scaled(10, args.scale));
    let population = args
        .population
        .unwrap_or_else(|| scaled_population(80, args.scale));
    let max_trees = args.max_trees.unwrap_or_else(|| scaled(1000, args.scale));
    std::fs::create_dir_all(&args.out)?;

    let mut manifest = ManifestWriter::new(
        "exp1",
        serde_json::json!({
            "args": serde_json::to_value(args)?,
            "resolved": {
                "n": n,
                "test_n": test_n,
                "generations": generations,
                "population": population,
                "max_trees": max_trees,
            },
        }),
    );
    manifest.seed("seed", args.seed);

    let root = RngStream::new(args.seed);
    let moea = Nsga2Config {
        generations,
        population,
        ..Default::default()
    };

    // diffs[family][p_noise index][dataset] = best MSE (fixed) - best MSE (random)
    let mut diffs = vec![vec![vec![None::<f64>; args.datasets]; args.p_noise.len()]; 2];
    let mut failures: Vec<String> = Vec::new();

    for d in 0..args.datasets {
        for (pi, &pn) in args.p_noise.iter().enumerate() {
            let cell_stream = root.child("cell").child(d).child(pn);
            let cell = draw_cell(pn, n, test_n, &cell_stream)?;
            for (fi, &family) in FAMILIES.iter().enumerate() {
                let space = exp1_space(family, max_trees, args.d_max, args.min_leaf)?;
                // One tuning stream per cell and family: both depth variants
                // replay identical initial draws and diverge only through
                // the flag's effect on the objectives.
                let tune_stream = cell_stream.child("tune").child(family.name());
                let mut best = [None::<f64>; 2];
                for (vi, random_depth) in [false, true].into_iter().enumerate() {
                    let variant = if random_depth { "on" } else { "off" };
                    let outcome = nsga2(
                        &space,
                        |params, eval_stream| {
                            fit_and_score(family, params, random_depth, &cell.train, &cell.test, eval_stream)
                        },
                        &moea,
                        &tune_stream,
                    );
                    match outcome {
                        Ok(o) => {
                            let name =
                                format!("front_{}_{}_d{}_pn{}.csv", family.name(), variant, d, pn);
                            let path = args.out.join(&name);
                            let csv = candidates_csv(&space, &o.front.members);
                            std::fs::write(&path, with_manifest_column(&csv, MANIFEST_NAME))?;
                            manifest.output(&path);
                            // Front members are sorted by ascending runtime
                            // and strictly descending MSE, so the accuracy
                            // end of the front is the last member.
                            best[vi] = o.front.members.last().map(|c| c.objectives.mse);
                            eprintln!(
                                "[exp1] dataset {} p_noise {} {} depth-{}: {} front members, best mse {}, {} evals in {:.1}s",
                                d,
                                pn,
                                family.name(),
                                variant,
                                o.front.members.len(),
                                best[vi].unwrap_or(f64::NAN),
                                o.evaluations,
                                o.total_seconds,
                            );
                        }
                        Err(e) => {
                            let note = format!(
                                "dataset {} p_noise {} {} depth-{}: {}",
                                d,
                                pn,
                                family.name(),
                                variant,
                                e
                            );
                            eprintln!("[exp1] failed {}", note);
                            failures.push(note);
                        }
                    }
                }
                if let (Some(off), Some(on)) = (best[0], best[1]) {
                    diffs[fi][pi][d] = Some(off - on);
                }
            }
        }
    }

    for (fi, family) in FAMILIES.iter().enumerate() {
        let mut csv = String::from("p_noise");
        for d in 1..=args.datasets {
            csv.push_str(&format!(",dataset_{}", d));
        }
        csv.push('\n');
        for (pi, &pn) in args.p_noise.iter().enumerate() {
            csv.push_str(&pn.to_string());
            for d in 0..args.datasets {
                csv.push(',');
                match diffs[fi][pi][d] {
                    Some(v) => csv.push_str(&v.to_string()),
                    None => csv.push_str("NA"),
                }
            }
            csv.push('\n');
        }
        let path = args.out.join(format!("diff_{}.csv", family.name()));
        std::fs::write(&path, with_manifest_column(&csv, MANIFEST_NAME))?;
        manifest.output(&path);
    }

    let cells = args.datasets * args.p_noise.len() * FAMILIES.len() * 2;
    manifest.note("failures", serde_json::to_value(&failures)?);
    manifest.write(&args.out.join(MANIFEST_NAME))?;
    println!(
        "exp1 complete: {} tuning runs, {} failed, outputs in {}",
        cells,
        failures.len(),
        args.out.display()
    );
    Ok(())
}

struct Exp2Row {
    dataset: usize,
    family: &'static str,
    mse_random: f64,
    mse_fixed: f64,
    tune_seconds_random: f64,
    tune_seconds_fixed: f64,
    hybrid_mse: Option<f64>,
}

impl Exp2Row {
    fn delta_mse(&self) -> f64 {
        self.mse_fixed - self.mse_random
    }

    fn delta_tune_seconds(&self) -> f64 {
        self.tune_seconds_fixed - self.tune_seconds_random
    }

    fn runtime_ratio(&self) -> f64 {
        self.tune_seconds_random / self.tune_seconds_fixed
    }

    fn hybrid_delta_mse(&self) -> Option<f64> {
        self.hybrid_mse.map(|h| self.mse_fixed - h)
    }
}

/// Run one paired tuning comparison: random search with the depth flag on
/// and off over identical draws, winner refit on the full training set,
/// scored on the test set. Forests also produce the hybrid final model.
fn run_exp2_pair(
    dataset: usize,
    family: Family,
    cell: &CellData,
    space: &ParamSpace,
    k: usize,
    scheme: &CvScheme,
    stream: &RngStream,
) -> Result<Exp2Row> {
    let scheme = *scheme;
    let search_with = |random_depth: bool| -> Result<RandomSearchOutcome> {
        random_search(
            space,
            |params, eval_stream| {
                let tuned = with_depth_flag(params, random_depth);
                evaluate_candidate(family.kind(), &tuned, &cell.train, &scheme, eval_stream)
            },
            k,
            &stream.child("search"),
        )
    };

    let (search_random, hybrid_mse) = match family {
        Family::Forest => {
            // The hybrid pipeline shares its search with the depth-on
            // variant label for label, so one search serves both columns.
            let hybrid = hybrid_tune_fit(&cell.train, space, k, &scheme, stream)?;
            let hybrid_mse = mse(
                &predict_forest_batch(&hybrid.final_model, &cell.test),
                cell.test.target(),
            )?;
            (hybrid.search, Some(hybrid_mse))
        }
        Family::Boost => (search_with(true)?, None),
    };
    let search_fixed = search_with(false)?;

    let mse_random = final_test_mse(
        family,
        &search_random.best().params,
        true,
        &cell.train,
        &cell.test,
        stream.child("final-on").derive_seed(),
    )?;
    let mse_fixed = final_test_mse(
        family,
        &search_fixed.best().params,
        false,
        &cell.train,
        &cell.test,
        stream.child("final-off").derive_seed(),
    )?;

    Ok(Exp2Row {
        dataset,
        family: family.name(),
        mse_random,
        mse_fixed,
        tune_seconds_random: search_random.total_seconds,
        tune_seconds_fixed: search_fixed.total_seconds,
        hybrid_mse,
    })
}

fn optional(value: Option<f64>) -> String {
    value.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

pub fn run_exp2(args: &Exp2Args) -> Result<()> {
    validate_scale(args.scale)?;
    let n = args.n.unwrap_or_else(|| scaled(10_000, args.scale));
    let test_n = (n / 2).max(1);
    let datasets = args.datasets.unwrap_or_else(|| scaled(50, args.scale));
    let k = args.k.unwrap_or_else(|| scaled(50, args.scale));
    let scheme = CvScheme {
        folds: args.folds,
        ..CvScheme::default()
    };
    std::fs::create_dir_all(&args.out)?;

    let mut manifest = ManifestWriter::new(
        "exp2",
        serde_json::json!({
            "args": serde_json::to_value(args)?,
            "resolved": {
                "n": n,
                "test_n": test_n,
                "datasets": datasets,
                "k": k,
            },
        }),
    );
    manifest.seed("seed", args.seed);

    let root = RngStream::new(args.seed);
    let mut rows: Vec<Exp2Row> = Vec::new();
    let mut failures: Vec<String> = Vec::new();

    for i in 0..datasets {
        let ds = root.child("dataset").child(i);
        let cell = draw_cell(0, n, test_n, &ds)?;
        for &family in &FAMILIES {
            let space = exp2_space(family, args.trees, args.d_max, args.min_leaf)?;
            let tune_stream = ds.child("tune").child(family.name());
            match run_exp2_pair(i, family, &cell, &space, k, &scheme, &tune_stream) {
                Ok(row) => {
                    eprintln!(
                        "[exp2] dataset {} {}: mse {} vs {} (delta {}), tuning {:.1}s vs {:.1}s (ratio {:.2})",
                        i,
                        row.family,
                        row.mse_random,
                        row.mse_fixed,
                        row.delta_mse(),
                        row.tune_seconds_random,
                        row.tune_seconds_fixed,
                        row.runtime_ratio(),
                    );
                    rows.push(row);
                }
                Err(e) => {
                    let note = format!("dataset {} {}: {}", i, family.name(), e);
                    eprintln!("[exp2] failed {}", note);
                    failures.push(note);
                }
            }
        }
    }

    let mut csv = String::from(
        "dataset,family,mse_random_depth,mse_fixed_depth,delta_mse,\
         tune_seconds_random_depth,tune_seconds_fixed_depth,delta_tune_seconds,\
         runtime_ratio,hybrid_mse,hybrid_delta_mse\n",
    );
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            row.dataset,
            row.family,
            row.mse_random,
            row.mse_fixed,
            row.delta_mse(),
            row.tune_seconds_random,
            row.tune_seconds_fixed,
            row.delta_tune_seconds(),
            row.runtime_ratio(),
            optional(row.hybrid_mse),
            optional(row.hybrid_delta_mse()),
        ));
    }
    let results_path = args.out.join("results.csv");
    std::fs::write(&results_path, with_manifest_column(&csv, MANIFEST_NAME))?;
    manifest.output(&results_path);

    let mut summary = String::from(
        "family,datasets,median_runtime_ratio,median_delta_mse,median_hybrid_delta_mse\n",
    );
    for family in FAMILIES {
        let family_rows: Vec<&Exp2Row> = rows.iter().filter(|r| r.family == family.name()).collect();
        if family_rows.is_empty() {
            summary.push_str(&format!("{},0,NA,NA,NA\n", family.name()));
            continue;
        }
        let ratios: Vec<f64> = family_rows.iter().map(|r| r.runtime_ratio()).collect();
        let deltas: Vec<f64> = family_rows.iter().map(|r| r.delta_mse()).collect();
        let hybrid_deltas: Vec<f64> = family_rows
            .iter()
            .filter_map(|r| r.hybrid_delta_mse())
            .collect();
        let hybrid_median = if hybrid_deltas.is_empty() {
            "NA".to_string()
        } else {
            sample_median(&hybrid_deltas)?.to_string()
        };
        summary.push_str(&format!(
            "{},{},{},{},{}\n",
            family.name(),
            family_rows.len(),
            sample_median(&ratios)?,
            sample_median(&deltas)?,
            hybrid_median,
        ));
    }
    let summary_path = args.out.join("summary.csv");
    std::fs::write(&summary_path, with_manifest_column(&summary, MANIFEST_NAME))?;
    manifest.output(&summary_path);

    manifest.note("failures", serde_json::to_value(&failures)?);
    manifest.write(&args.out.join(MANIFEST_NAME))?;
    println!(
        "exp2 complete: {} comparisons, {} failed, outputs in {}",
        rows.len() + failures.len(),
        failures.len(),
        args.out.display()
    );
    Ok(())
}
