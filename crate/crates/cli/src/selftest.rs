//! `selftest`: fast end-to-end consistency checks over the library.
//!
//! Each check prints one `PASS`/`FAIL` line; any failure makes the command
//! exit 1. The checks are small enough to finish in a few seconds, so the
//! command doubles as a smoke test for scripted installs.

use rand::Rng;

use randepth::tuning::{nondominated_filter, Candidate, Objectives, Params};
use randepth::{
    expected_relative_splits, fit_adaboost, fit_boost, fit_forest, generate, mse,
    predict_adaboost_batch, predict_boost_batch, predict_forest, sample_spec, BoostConfig, Dataset,
    ForestConfig, Result, RngStream, TreeConfig,
};

use crate::args::SelftestArgs;

type Check = (&'static str, fn(u64) -> std::result::Result<(), String>);

fn err(detail: impl Into<String>) -> std::result::Result<(), String> {
    Err(detail.into())
}

fn demo_data(seed: u64, n: usize, p_signal: usize) -> std::result::Result<Dataset, String> {
    let stream = RngStream::new(seed);
    let spec = sample_spec(p_signal, 0, &stream.child("spec")).map_err(|e| e.to_string())?;
    let generated = generate(&spec, n, &stream.child("data")).map_err(|e| e.to_string())?;
    Ok(generated.dataset)
}

fn check_relative_split_budget(_seed: u64) -> std::result::Result<(), String> {
    let cases = [
        (1, 1.0),
        (2, 0.75),
        (3, 7.0 / 12.0),
        (4, 0.46875),
    ];
    for (d_max, expected) in cases {
        let got = expected_relative_splits(d_max).map_err(|e| e.to_string())?;
        if got != expected {
            return err(format!("d_max {}: expected {}, got {}", d_max, expected, got));
        }
    }
    Ok(())
}

fn check_forest_is_mean_of_trees(seed: u64) -> std::result::Result<(), String> {
    let data = demo_data(seed, 200, 4)?;
    let config = ForestConfig {
        n_trees: 12,
        tree: TreeConfig::default(),
        obs_fraction: 0.8,
        with_replacement: true,
        random_depth: true,
        seed,
    };
    let model = fit_forest(&data, &config);
    for i in 0..20 {
        let x = data.row(i);
        let mean = model.trees.iter().map(|t| t.predict(&x)).sum::<f64>() / model.trees.len() as f64;
        let got = predict_forest(&model, &x);
        if (got - mean).abs() > 1e-12 {
            return err(format!("row {}: forest {} vs tree mean {}", i, got, mean));
        }
    }
    Ok(())
}

fn check_fit_determinism(seed: u64) -> std::result::Result<(), String> {
    let data = demo_data(seed, 150, 3)?;
    let config = ForestConfig {
        n_trees: 8,
        tree: TreeConfig::default(),
        obs_fraction: 0.7,
        with_replacement: false,
        random_depth: true,
        seed,
    };
    let a = fit_forest(&data, &config);
    let b = fit_forest(&data, &config);
    if a.trees != b.trees {
        return err("two fits with one seed grew different trees");
    }
    Ok(())
}

fn check_boost_zero_stages_is_mean(seed: u64) -> std::result::Result<(), String> {
    let data = demo_data(seed, 100, 3)?;
    let config = BoostConfig {
        n_iterations: 0,
        learning_rate: 0.3,
        obs_fraction: 1.0,
        tree: TreeConfig::default(),
        random_depth: false,
        seed,
    };
    let model = fit_boost(&data, &config);
    let mean = data.target().iter().sum::<f64>() / data.n_rows() as f64;
    for p in predict_boost_batch(&model, &data) {
        if p != mean {
            return err(format!("stageless prediction {} differs from mean {}", p, mean));
        }
    }
    Ok(())
}

fn check_boost_training_error_monotone(seed: u64) -> std::result::Result<(), String> {
    let data = demo_data(seed, 200, 4)?;
    let config = BoostConfig {
        n_iterations: 30,
        learning_rate: 0.5,
        obs_fraction: 1.0,
        tree: TreeConfig {
            max_depth: 3,
            ..TreeConfig::default()
        },
        random_depth: false,
        seed,
    };
    let model = fit_boost(&data, &config);
    let mut previous = f64::INFINITY;
    for m in 0..=model.stages.len() {
        let truncated = randepth::BoostModel {
            initial_value: model.initial_value,
            stages: model.stages[..m].to_vec(),
            config: model.config.clone(),
            fit_stats: model.fit_stats.clone(),
        };
        let current = mse(&predict_boost_batch(&truncated, &data), data.target())
            .map_err(|e| e.to_string())?;
        if current > previous + 1e-12 {
            return err(format!("training MSE rose at stage {}: {} > {}", m, current, previous));
        }
        previous = current;
    }
    Ok(())
}

fn check_random_depth_reduces_splits(seed: u64) -> std::result::Result<(), String> {
    let data = demo_data(seed, 300, 4)?;
    let base = ForestConfig {
        n_trees: 40,
        tree: TreeConfig {
            max_depth: 4,
            min_leaf_size: 2,
            feature_fraction: 1.0,
        },
        obs_fraction: 1.0,
        with_replacement: true,
        random_depth: false,
        seed,
    };
    let full = fit_forest(&data, &base);
    let random = fit_forest(
        &data,
        &ForestConfig {
            random_depth: true,
            ..base
        },
    );
    if random.fit_stats.total_splits >= full.fit_stats.total_splits {
        return err(format!(
            "random depth grew {} splits, fixed depth {}",
            random.fit_stats.total_splits, full.fit_stats.total_splits
        ));
    }
    Ok(())
}

fn check_split_matches_exhaustive_search(seed: u64) -> std::result::Result<(), String> {
    let root = RngStream::new(seed);
    for case in 0..15 {
        let mut rng = root.child("case").child(case).rng();
        let n = rng.random_range(6..=25);
        let p = rng.random_range(1..=2);
        let columns: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let target: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = Dataset::with_default_names(columns, target.clone()).map_err(|e| e.to_string())?;
        let rows: Vec<usize> = (0..n).collect();
        let features: Vec<usize> = (0..p).collect();
        let min_leaf = 2;

        let got = randepth::tree::best_split(&data, &target, &rows, &features, min_leaf)
            .map_err(|e| e.to_string())?;

        // Brute force: for every feature and every boundary between distinct
        // sorted values, recompute both child SSEs from scratch. Sums fold
        // in the documented order (left ascending from the head, right
        // descending from the tail), so agreement must be bitwise.
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..p {
            let column = data.feature(j);
            let mut pairs: Vec<(f64, f64)> = rows.iter().map(|&i| (column[i], target[i])).collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            for k in 1..n {
                if pairs[k - 1].0 == pairs[k].0 || k < min_leaf || n - k < min_leaf {
                    continue;
                }
                let threshold = (pairs[k - 1].0 + pairs[k].0) / 2.0;
                let (mut ls, mut lq) = (0.0, 0.0);
                for &(_, y) in &pairs[..k] {
                    ls += y;
                    lq += y * y;
                }
                let (mut rs, mut rq) = (0.0, 0.0);
                for &(_, y) in pairs[k..].iter().rev() {
                    rs += y;
                    rq += y * y;
                }
                let total = (lq - ls * ls / k as f64).max(0.0)
                    + (rq - rs * rs / (n - k) as f64).max(0.0);
                if best.as_ref().is_none_or(|&(_, _, s)| total < s) {
                    best = Some((j, threshold, total));
                }
            }
        }
        let (mut sum, mut sumsq) = (0.0, 0.0);
        for &i in &rows {
            sum += target[i];
            sumsq += target[i] * target[i];
        }
        let node_sse = (sumsq - sum * sum / n as f64).max(0.0);
        let all_equal = target.iter().all(|&y| y == target[0]);
        let oracle = best.filter(|&(_, _, s)| s < node_sse && !all_equal);

        match (&got, &oracle) {
            (None, None) => {}
            (Some(g), Some((j, t, s))) => {
                if g.feature_index != *j || g.threshold != *t || g.sse_total != *s {
                    return err(format!(
                        "case {}: split ({}, {}, {}) vs oracle ({}, {}, {})",
                        case, g.feature_index, g.threshold, g.sse_total, j, t, s
                    ));
                }
            }
            _ => return err(format!("case {}: presence mismatch {:?} vs {:?}", case, got.is_some(), oracle.is_some())),
        }
    }
    Ok(())
}

fn check_pareto_filter_matches_pairwise(seed: u64) -> std::result::Result<(), String> {
    let stream = RngStream::new(seed).child("pareto");
    let mut rng = stream.rng();
    let candidates: Vec<Candidate> = (0..150)
        .map(|i| Candidate {
            params: Params::new(),
            objectives: Objectives {
                mse: f64::from(rng.random_range(0..12)),
                fit_seconds: f64::from(rng.random_range(0..12)),
            },
            provenance: i,
            eval_stream: stream.child(i),
        })
        .collect();
    let front = nondominated_filter(&candidates);
    for (i, c) in candidates.iter().enumerate() {
        let dominated = candidates.iter().any(|o| o.objectives.dominates(&c.objectives));
        let duplicate_of_earlier = candidates[..i]
            .iter()
            .any(|o| o.objectives == c.objectives);
        let expected = !dominated && !duplicate_of_earlier;
        let included = front.members.iter().any(|m| m.provenance == c.provenance);
        if expected != included {
            return err(format!(
                "candidate {} ({}, {}): expected {}, included {}",
                i, c.objectives.mse, c.objectives.fit_seconds, expected, included
            ));
        }
    }
    Ok(())
}

fn check_generator_determinism(seed: u64) -> std::result::Result<(), String> {
    let stream = RngStream::new(seed);
    let spec = sample_spec(4, 2, &stream.child("spec")).map_err(|e| e.to_string())?;
    let a = generate(&spec, 60, &stream.child("rows")).map_err(|e| e.to_string())?;
    let b = generate(&spec, 60, &stream.child("rows")).map_err(|e| e.to_string())?;
    if a.dataset.to_csv_string() != b.dataset.to_csv_string() {
        return err("two generations from one stream differ");
    }
    if a.dataset.n_features() != 6 {
        return err(format!("expected 6 columns, got {}", a.dataset.n_features()));
    }
    for term in &spec.terms {
        if term.feature_indices.is_empty() || term.feature_indices.len() > 4 {
            return err(format!("term arity {} outside [1, 4]", term.feature_indices.len()));
        }
    }
    Ok(())
}

fn check_adaboost_vote_and_separable_fit(seed: u64) -> std::result::Result<(), String> {
    let expected = 3.0f64.ln();
    let got = randepth::adaboost::vote_weight(0.25);
    if got != expected {
        return err(format!("vote weight at error 0.25: {} vs ln 3 {}", got, expected));
    }
    let stream = RngStream::new(seed).child("adaboost");
    let mut rng = stream.rng();
    let xs: Vec<f64> = (0..40).map(|_| rng.random_range(-1.0..1.0)).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f64::from(u8::from(x > 0.1))).collect();
    if !ys.contains(&0.0) || !ys.contains(&1.0) {
        return err("degenerate toy draw, both classes required");
    }
    let data = Dataset::with_default_names(vec![xs], ys.clone()).map_err(|e| e.to_string())?;
    let stump = TreeConfig {
        max_depth: 1,
        min_leaf_size: 1,
        feature_fraction: 1.0,
    };
    let model = fit_adaboost(&data, 10, &stump).map_err(|e| e.to_string())?;
    let preds = predict_adaboost_batch(&model, &data);
    let errors = preds
        .iter()
        .zip(&ys)
        .filter(|(p, y)| f64::from(**p) != **y)
        .count();
    if errors != 0 {
        return err(format!("separable toy left {} training errors", errors));
    }
    Ok(())
}

const CHECKS: [Check; 10] = [
    ("relative_split_budget", check_relative_split_budget),
    ("forest_is_mean_of_trees", check_forest_is_mean_of_trees),
    ("fit_determinism", check_fit_determinism),
    ("boost_zero_stages_is_mean", check_boost_zero_stages_is_mean),
    ("boost_training_error_monotone", check_boost_training_error_monotone),
    ("random_depth_reduces_splits", check_random_depth_reduces_splits),
    ("split_matches_exhaustive_search", check_split_matches_exhaustive_search),
    ("pareto_filter_matches_pairwise", check_pareto_filter_matches_pairwise),
    ("generator_determinism", check_generator_determinism),
    ("adaboost_vote_and_separable_fit", check_adaboost_vote_and_separable_fit),
];

/// Returns whether every check passed.
pub fn run(args: &SelftestArgs) -> Result<bool> {
    let mut all_passed = true;
    for (name, check) in CHECKS {
        match check(args.seed) {
            Ok(()) => println!("PASS {}", name),
            Err(detail) => {
                all_passed = false;
                println!("FAIL {}: {}", name, detail);
            }
        }
    }
    Ok(all_passed)
}
