//! Binary regression trees grown by exhaustive least-squares split search.
//!
//! Split semantics, fixed across the whole crate:
//! * candidate thresholds are midpoints between consecutive distinct sorted
//!   values of a feature within the node;
//! * rows with `x[j] <= threshold` go left;
//! * both children must hold at least `min_leaf_size` rows;
//! * a node splits only if the best candidate strictly reduces the node's
//!   SSE, so zero-variance nodes and gainless patterns become leaves;
//! * ties between candidates break toward the lowest feature index, then the
//!   smallest threshold.
//!
//! Floating-point conventions matter here because the split search is
//! verified against an independent brute-force enumerator that must agree to
//! the last bit. Within a node, rows are sorted stably by (value, prior
//! order) using `f64::total_cmp`. Left-child sums accumulate ascending from
//! the first sorted row; right-child sums accumulate from the last sorted row
//! downward; child SSE is `max(0, sumsq - sum^2/count)`; the total is left
//! plus right in that order. Parent SSE folds rows in the order given.

use crate::data::Dataset;
use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sampling::sample_without_replacement;

/// Growth limits shared by every tree in this crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Maximum tree depth (root = depth 0). Also the upper end of the
    /// randomized depth-budget draw in the ensembles.
    pub max_depth: usize,
    /// Minimum rows in each child of a split.
    pub min_leaf_size: usize,
    /// Fraction of features drawn as split candidates at every node.
    /// The candidate count is max(1, round(fraction * p)).
    pub feature_fraction: f64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: 5,
            min_leaf_size: 5,
            feature_fraction: 1.0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_leaf_size == 0 {
            return Err(Error::contract("min_leaf_size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.feature_fraction) {
            return Err(Error::contract(format!(
                "feature_fraction {} outside [0, 1]",
                self.feature_fraction
            )));
        }
        Ok(())
    }

    /// Number of candidate features drawn per node.
    pub fn m_try(&self, p: usize) -> usize {
        ((self.feature_fraction * p as f64).round() as usize).clamp(1, p)
    }
}

/// The winning split of one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature_index: usize,
    pub threshold: f64,
    /// Sum of the two children's SSE around their own means.
    pub sse_total: f64,
    pub left_count: usize,
    pub right_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    fn count_splits(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.count_splits() + right.count_splits(),
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn leaf_count(&self) -> usize {
        match self {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

/// A fitted regression tree plus the depth budget it was grown under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: Node,
    /// The depth budget in force when the tree was grown. With randomized
    /// depth this records the draw, not the realized depth.
    pub depth_drawn: usize,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    /// Predict for dataset row `i` straight from column storage, without
    /// materializing the row. Hot path for ensemble training loops.
    pub fn predict_row(&self, data: &Dataset, i: usize) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if data.value(i, *feature) <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn count_splits(&self) -> usize {
        self.root.count_splits()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn leaf_count(&self) -> usize {
        self.root.leaf_count()
    }
}

/// Mean of `targets` over `rows`, folded in the order given.
fn mean_over(targets: &[f64], rows: &[usize]) -> f64 {
    let mut sum = 0.0;
    for &i in rows {
        sum += targets[i];
    }
    sum / rows.len() as f64
}

/// SSE of `targets` over `rows` around their mean, via sum and sum of
/// squares folded in the order given, clamped at zero.
fn sse_over(targets: &[f64], rows: &[usize]) -> f64 {
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for &i in rows {
        let y = targets[i];
        sum += y;
        sumsq += y * y;
    }
    (sumsq - sum * sum / rows.len() as f64).max(0.0)
}

/// Exhaustive least-squares split search over the given rows and candidate
/// features, following the conventions in the module docs. Returns `None`
/// when no feasible candidate exists or none strictly reduces the node SSE.
/// An empty candidate set is a contract error.
pub fn best_split(
    data: &Dataset,
    targets: &[f64],
    rows: &[usize],
    candidate_features: &[usize],
    min_leaf_size: usize,
) -> Result<Option<SplitCandidate>> {
    if candidate_features.is_empty() {
        return Err(Error::contract("empty candidate feature set"));
    }
    if min_leaf_size == 0 {
        return Err(Error::contract("min_leaf_size must be at least 1"));
    }
    let n = rows.len();
    if n < 2 || n < 2 * min_leaf_size {
        return Ok(None);
    }
    let first = targets[rows[0]];
    if rows.iter().all(|&i| targets[i] == first) {
        return Ok(None);
    }
    let parent_sse = sse_over(targets, rows);

    let mut features: Vec<usize> = candidate_features.to_vec();
    features.sort_unstable();
    features.dedup();

    let mut best: Option<SplitCandidate> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut suffix: Vec<(f64, f64)> = vec![(0.0, 0.0); n + 1];
    for &j in &features {
        if j >= data.n_features() {
            return Err(Error::contract(format!(
                "candidate feature {} out of range for {} features",
                j,
                data.n_features()
            )));
        }
        let column = data.feature(j);
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (column[i], targets[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        // Right-child sums accumulate from the last sorted row downward.
        suffix[n] = (0.0, 0.0);
        let mut rsum = 0.0;
        let mut rsumsq = 0.0;
        for k in (0..n).rev() {
            let y = pairs[k].1;
            rsum += y;
            rsumsq += y * y;
            suffix[k] = (rsum, rsumsq);
        }
        let mut lsum = 0.0;
        let mut lsumsq = 0.0;
        for k in 1..n {
            let y = pairs[k - 1].1;
            lsum += y;
            lsumsq += y * y;
            if pairs[k - 1].0 == pairs[k].0 {
                continue;
            }
            if k < min_leaf_size || n - k < min_leaf_size {
                continue;
            }
            let threshold = (pairs[k - 1].0 + pairs[k].0) / 2.0;
            let sse_left = (lsumsq - lsum * lsum / k as f64).max(0.0);
            let (rs, rsq) = suffix[k];
            let sse_right = (rsq - rs * rs / (n - k) as f64).max(0.0);
            let sse_total = sse_left + sse_right;
            if best.as_ref().map_or(true, |b| sse_total < b.sse_total) {
                best = Some(SplitCandidate {
                    feature_index: j,
                    threshold,
                    sse_total,
                    left_count: k,
                    right_count: n - k,
                });
            }
        }
    }
    Ok(best.filter(|b| b.sse_total < parent_sse))
}

/// Candidate features for one node: all of them when the fraction covers the
/// whole set, otherwise a fresh uniform subset, sorted ascending so that
/// tie-breaking by feature index is order-independent.
fn choose_candidate_features<R: Rng>(p: usize, config: &TreeConfig, rng: &mut R) -> Vec<usize> {
    let m = config.m_try(p);
    if m >= p {
        return (0..p).collect();
    }
    let mut chosen = sample_without_replacement(p, m, rng);
    chosen.sort_unstable();
    chosen
}

fn grow_node<R: Rng>(
    data: &Dataset,
    targets: &[f64],
    rows: Vec<usize>,
    depth: usize,
    depth_budget: usize,
    config: &TreeConfig,
    rng: &mut R,
) -> Node {
    let value = mean_over(targets, &rows);
    if depth >= depth_budget || rows.len() < 2 * config.min_leaf_size {
        return Node::Leaf { value };
    }
    let candidates = choose_candidate_features(data.n_features(), config, rng);
    let split = best_split(data, targets, &rows, &candidates, config.min_leaf_size)
        .expect("candidate set is nonempty by construction");
    let Some(split) = split else {
        return Node::Leaf { value };
    };
    let column = data.feature(split.feature_index);
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&i| column[i] <= split.threshold);
    debug_assert_eq!(left_rows.len(), split.left_count);
    debug_assert_eq!(right_rows.len(), split.right_count);
    let left = grow_node(data, targets, left_rows, depth + 1, depth_budget, config, rng);
    let right = grow_node(data, targets, right_rows, depth + 1, depth_budget, config, rng);
    Node::Split {
        feature: split.feature_index,
        threshold: split.threshold,
        left: Box::new(left),
        right: Box::new(right),
    }
}

/// Grow a tree on `rows` predicting `targets` (one value per dataset row).
/// `depth_budget` must not exceed `config.max_depth`; a budget of zero or
/// degenerate input yields a single-leaf tree. A fresh candidate-feature
/// subset is drawn from `rng` at every internal node.
pub fn grow_tree_with_targets<R: Rng>(
    data: &Dataset,
    targets: &[f64],
    rows: &[usize],
    config: &TreeConfig,
    depth_budget: usize,
    rng: &mut R,
) -> RegressionTree {
    assert!(
        depth_budget <= config.max_depth,
        "depth budget {} exceeds configured maximum {}",
        depth_budget,
        config.max_depth
    );
    assert_eq!(targets.len(), data.n_rows(), "one target per dataset row");
    assert!(!rows.is_empty(), "cannot grow a tree on zero rows");
    config.validate().expect("invalid tree config");
    let root = grow_node(data, targets, rows.to_vec(), 0, depth_budget, config, rng);
    RegressionTree {
        root,
        depth_drawn: depth_budget,
    }
}

/// Grow a tree on the dataset's own response.
pub fn grow_tree<R: Rng>(
    data: &Dataset,
    rows: &[usize],
    config: &TreeConfig,
    depth_budget: usize,
    rng: &mut R,
) -> RegressionTree {
    grow_tree_with_targets(data, data.target(), rows, config, depth_budget, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn line_data(ys: &[f64]) -> Dataset {
        let xs: Vec<f64> = (1..=ys.len()).map(|i| i as f64).collect();
        Dataset::with_default_names(vec![xs], ys.to_vec()).unwrap()
    }

    fn all_rows(d: &Dataset) -> Vec<usize> {
        (0..d.n_rows()).collect()
    }

    #[test]
    fn clean_step_splits_at_midpoint_with_zero_sse() {
        let d = line_data(&[0.0, 0.0, 1.0, 1.0]);
        let c = best_split(&d, d.target(), &all_rows(&d), &[0], 1)
            .unwrap()
            .unwrap();
        assert_eq!(c.feature_index, 0);
        assert_eq!(c.threshold, 2.5);
        assert_eq!(c.sse_total, 0.0);
        assert_eq!((c.left_count, c.right_count), (2, 2));
    }

    #[test]
    fn alternating_pattern_breaks_tie_toward_smallest_threshold() {
        // Thresholds 1.5 and 3.5 both leave SSE 2/3; 2.5 leaves 1. The tie
        // must resolve to the smaller threshold.
        let d = line_data(&[0.0, 1.0, 0.0, 1.0]);
        let c = best_split(&d, d.target(), &all_rows(&d), &[0], 1)
            .unwrap()
            .unwrap();
        assert_eq!(c.feature_index, 0);
        assert_eq!(c.threshold, 1.5);
        assert!((c.sse_total - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn feature_tie_breaks_toward_lowest_index() {
        // Two identical columns: the split must land on feature 0.
        let xs = vec![1.0, 2.0, 3.0, 4.0];
        let d = Dataset::with_default_names(vec![xs.clone(), xs], vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let c = best_split(&d, d.target(), &all_rows(&d), &[1, 0], 1)
            .unwrap()
            .unwrap();
        assert_eq!(c.feature_index, 0);
    }

    #[test]
    fn no_split_cases() {
        // Constant response.
        let d = line_data(&[3.5, 3.5, 3.5, 3.5]);
        assert!(best_split(&d, d.target(), &all_rows(&d), &[0], 1).unwrap().is_none());
        // Constant feature.
        let d = Dataset::with_default_names(vec![vec![2.0; 4]], vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(best_split(&d, d.target(), &all_rows(&d), &[0], 1).unwrap().is_none());
        // min_leaf_size infeasible.
        let d = line_data(&[0.0, 1.0, 2.0]);
        assert!(best_split(&d, d.target(), &all_rows(&d), &[0], 2).unwrap().is_none());
        // Feasible split exists but leaves SSE unchanged.
        let d = Dataset::with_default_names(
            vec![vec![1.0, 1.0, 2.0, 2.0]],
            vec![0.0, 1.0, 0.0, 1.0],
        )
        .unwrap();
        assert!(best_split(&d, d.target(), &all_rows(&d), &[0], 1).unwrap().is_none());
        // Single row.
        let d = line_data(&[1.0]);
        assert!(best_split(&d, d.target(), &all_rows(&d), &[0], 1).unwrap().is_none());
    }

    #[test]
    fn empty_candidate_set_is_error() {
        let d = line_data(&[0.0, 1.0]);
        assert!(best_split(&d, d.target(), &all_rows(&d), &[], 1).is_err());
    }

    #[test]
    fn duplicate_values_share_one_side() {
        // Both rows with x = 2 must land on the same side; the only
        // thresholds are between distinct values.
        let d = Dataset::with_default_names(
            vec![vec![1.0, 2.0, 2.0, 3.0]],
            vec![0.0, 5.0, 5.0, 10.0],
        )
        .unwrap();
        let c = best_split(&d, d.target(), &all_rows(&d), &[0], 1)
            .unwrap()
            .unwrap();
        assert!(c.threshold == 1.5 || c.threshold == 2.5);
    }

    #[test]
    fn separable_quadrants_need_depth_two() {
        let d = Dataset::with_default_names(
            vec![vec![0.0, 0.0, 1.0, 1.0], vec![0.0, 1.0, 0.0, 1.0]],
            vec![0.0, 1.0, 2.0, 3.0],
        )
        .unwrap();
        let config = TreeConfig {
            max_depth: 2,
            min_leaf_size: 1,
            feature_fraction: 1.0,
        };
        let mut rng = RngStream::new(0).child("t").rng();
        let deep = grow_tree(&d, &all_rows(&d), &config, 2, &mut rng);
        assert_eq!(deep.leaf_count(), 4);
        for i in 0..4 {
            assert_eq!(deep.predict(&d.row(i)), d.target()[i]);
        }
        let stump = grow_tree(&d, &all_rows(&d), &config, 1, &mut rng);
        assert_eq!(stump.depth(), 1);
        let miss = (0..4).any(|i| stump.predict(&d.row(i)) != d.target()[i]);
        assert!(miss, "a stump cannot separate four distinct quadrant values");
    }

    #[test]
    fn zero_budget_gives_mean_leaf() {
        let d = line_data(&[1.0, 2.0, 6.0]);
        let config = TreeConfig {
            max_depth: 3,
            min_leaf_size: 1,
            feature_fraction: 1.0,
        };
        let mut rng = RngStream::new(0).child("t").rng();
        let t = grow_tree(&d, &all_rows(&d), &config, 0, &mut rng);
        assert_eq!(t.count_splits(), 0);
        assert_eq!(t.predict(&[2.0]), 3.0);
        assert_eq!(t.depth_drawn, 0);
    }

    #[test]
    fn min_leaf_respected_in_grown_tree() {
        let mut rng = RngStream::new(13).child("t").rng();
        let n = 60;
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x + 0.1).collect();
        let d = Dataset::with_default_names(vec![xs], ys).unwrap();
        let config = TreeConfig {
            max_depth: 4,
            min_leaf_size: 7,
            feature_fraction: 1.0,
        };
        let t = grow_tree(&d, &all_rows(&d), &config, 4, &mut rng);
        fn check(node: &Node, d: &Dataset, rows: Vec<usize>, min: usize) {
            match node {
                Node::Leaf { .. } => assert!(rows.len() >= min),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        rows.into_iter().partition(|&i| d.value(i, *feature) <= *threshold);
                    check(left, d, l, min);
                    check(right, d, r, min);
                }
            }
        }
        check(&t.root, &d, all_rows(&d), 7);
    }

    #[test]
    fn predict_sends_threshold_equality_left() {
        let t = RegressionTree {
            root: Node::Split {
                feature: 0,
                threshold: 2.5,
                left: Box::new(Node::Leaf { value: -1.0 }),
                right: Box::new(Node::Leaf { value: 1.0 }),
            },
            depth_drawn: 1,
        };
        assert_eq!(t.predict(&[2.5]), -1.0);
        assert_eq!(t.predict(&[2.5000001]), 1.0);
    }

    #[test]
    fn m_try_clamps() {
        let config = TreeConfig {
            max_depth: 1,
            min_leaf_size: 1,
            feature_fraction: 0.05,
        };
        assert_eq!(config.m_try(10), 1);
        let config = TreeConfig {
            feature_fraction: 1.0,
            ..config
        };
        assert_eq!(config.m_try(10), 10);
        let config = TreeConfig {
            feature_fraction: 0.3,
            ..config
        };
        assert_eq!(config.m_try(10), 3);
    }

    #[test]
    fn candidate_subsets_are_sorted_distinct_and_vary() {
        let config = TreeConfig {
            max_depth: 1,
            min_leaf_size: 1,
            feature_fraction: 0.4,
        };
        let mut rng = RngStream::new(21).child("f").rng();
        let mut seen = std::collections::HashSet::new();
        for _ in 0..50 {
            let c = choose_candidate_features(10, &config, &mut rng);
            assert_eq!(c.len(), 4);
            assert!(c.windows(2).all(|w| w[0] < w[1]));
            seen.insert(c);
        }
        assert!(seen.len() > 1, "feature subsets never varied");
    }

    #[test]
    fn serialization_round_trips() {
        let mut rng = RngStream::new(17).child("t").rng();
        let xs: Vec<f64> = (0..40).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin()).collect();
        let d = Dataset::with_default_names(vec![xs], ys).unwrap();
        let config = TreeConfig {
            max_depth: 3,
            min_leaf_size: 2,
            feature_fraction: 1.0,
        };
        let t = grow_tree(&d, &all_rows(&d), &config, 3, &mut rng);
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("Split") && json.contains("Leaf"));
        let back: RegressionTree = serde_json::from_str(&json).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn monotone_feature_transform_keeps_predictions() {
        // Cubing a coordinate is strictly increasing, so the fitted tree
        // routes every training row identically and leaf values match
        // bit for bit.
        let mut rng = RngStream::new(23).child("t").rng();
        let n = 80;
        let x1: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x2: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ys: Vec<f64> = x1
            .iter()
            .zip(&x2)
            .map(|(a, b)| a.max(*b) + 0.25 * a)
            .collect();
        let transformed: Vec<f64> = x1.iter().map(|v| v * v * v).collect();
        let d = Dataset::with_default_names(vec![x1, x2.clone()], ys.clone()).unwrap();
        let dt = Dataset::with_default_names(vec![transformed, x2], ys).unwrap();
        let config = TreeConfig {
            max_depth: 4,
            min_leaf_size: 2,
            feature_fraction: 1.0,
        };
        let rows = all_rows(&d);
        let mut r1 = RngStream::new(5).child("a").rng();
        let mut r2 = RngStream::new(5).child("a").rng();
        let t = grow_tree(&d, &rows, &config, 4, &mut r1);
        let tt = grow_tree(&dt, &rows, &config, 4, &mut r2);
        for i in 0..n {
            assert_eq!(t.predict(&d.row(i)).to_bits(), tt.predict(&dt.row(i)).to_bits());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn structural_invariants_hold(
            seed in 0u64..1000,
            n in 2usize..60,
            budget in 0usize..5,
            min_leaf in 1usize..4,
        ) {
            let mut rng = RngStream::new(seed).child("prop").rng();
            let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let zs: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let ys: Vec<f64> = xs.iter().zip(&zs).map(|(x, z)| x * 2.0 - z).collect();
            let d = Dataset::with_default_names(vec![xs, zs], ys).unwrap();
            let config = TreeConfig { max_depth: 5, min_leaf_size: min_leaf, feature_fraction: 1.0 };
            let rows: Vec<usize> = (0..n).collect();
            let t = grow_tree(&d, &rows, &config, budget, &mut rng);
            prop_assert!(t.depth() <= budget);
            prop_assert_eq!(t.leaf_count(), t.count_splits() + 1);
            prop_assert!(t.leaf_count() <= 1 << budget);
        }
    }
}
