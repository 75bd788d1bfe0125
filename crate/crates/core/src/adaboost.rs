//! Binary AdaBoost over weighted-misclassification classifier trees.
//!
//! Classes are {0, 1}, encoded in the response column as exactly 0.0 or 1.0.
//! Rounds reweight the training rows: a stage's vote weight is
//! log((1 - err) / err) of its weighted error, misclassified rows are
//! upweighted by that factor, and fitting stops early on a perfect stage or
//! when no stage beats chance. Prediction is the weighted vote over stages,
//! ties resolving to class 0.
//!
//! The base learner is a small tree grown greedily to minimize weighted
//! misclassification cost, with the same threshold and tie conventions as
//! the regression trees. It uses every feature at every node; the config's
//! feature_fraction is ignored because fitting takes no RNG.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::tree::TreeConfig;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ClassNode {
    Leaf {
        class: u8,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<ClassNode>,
        right: Box<ClassNode>,
    },
}

impl ClassNode {
    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut node = self;
        loop {
            match node {
                ClassNode::Leaf { class } => return *class,
                ClassNode::Split {
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

    pub fn count_splits(&self) -> usize {
        match self {
            ClassNode::Leaf { .. } => 0,
            ClassNode::Split { left, right, .. } => 1 + left.count_splits() + right.count_splits(),
        }
    }

    fn predict_row(&self, data: &Dataset, i: usize) -> u8 {
        let mut node = self;
        loop {
            match node {
                ClassNode::Leaf { class } => return *class,
                ClassNode::Split {
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
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostStage {
    pub tree: ClassNode,
    pub vote_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub stages: Vec<AdaBoostStage>,
    pub classes: [u8; 2],
}

/// Stage vote weight for a weighted error: log((1 - err) / err).
/// err = 0.25 gives exactly ln 3.
pub fn vote_weight(err: f64) -> f64 {
    ((1.0 - err) / err).ln()
}

/// Finite stand-in for the infinite-confidence weight of a perfect stage,
/// equivalent to an error of one part in a trillion.
fn perfect_stage_vote() -> f64 {
    1e12f64.ln()
}

/// Class weights of a node: (weight on class 0, weight on class 1).
fn class_weights(rows: &[usize], y: &[f64], w: &[f64]) -> (f64, f64) {
    let mut w0 = 0.0;
    let mut w1 = 0.0;
    for &i in rows {
        if y[i] == 0.0 {
            w0 += w[i];
        } else {
            w1 += w[i];
        }
    }
    (w0, w1)
}

/// Misclassification weight when predicting the weighted-majority class
/// (ties predict class 0, so the cost is the class-1 weight).
fn majority_cost(w0: f64, w1: f64) -> (u8, f64) {
    if w1 > w0 {
        (1, w0)
    } else {
        (0, w1)
    }
}

struct ClassSplit {
    feature: usize,
    threshold: f64,
    cost: f64,
    left_count: usize,
}

fn best_class_split(
    data: &Dataset,
    y: &[f64],
    w: &[f64],
    rows: &[usize],
    min_leaf_size: usize,
) -> Option<ClassSplit> {
    let n = rows.len();
    if n < 2 * min_leaf_size {
        return None;
    }
    let (w0, w1) = class_weights(rows, y, w);
    let (_, node_cost) = majority_cost(w0, w1);
    let mut best: Option<ClassSplit> = None;
    let mut order: Vec<(f64, f64, f64)> = Vec::with_capacity(n);
    for j in 0..data.n_features() {
        let column = data.feature(j);
        order.clear();
        order.extend(rows.iter().map(|&i| (column[i], y[i], w[i])));
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        if order[0].0 == order[n - 1].0 {
            continue;
        }
        let mut lw0 = 0.0;
        let mut lw1 = 0.0;
        for k in 1..n {
            let (v, yi, wi) = order[k - 1];
            if yi == 0.0 {
                lw0 += wi;
            } else {
                lw1 += wi;
            }
            if v == order[k].0 {
                continue;
            }
            if k < min_leaf_size || n - k < min_leaf_size {
                continue;
            }
            let cost = lw0.min(lw1) + (w0 - lw0).min(w1 - lw1);
            if best.as_ref().map_or(true, |b| cost < b.cost) {
                best = Some(ClassSplit {
                    feature: j,
                    threshold: (v + order[k].0) / 2.0,
                    cost,
                    left_count: k,
                });
            }
        }
    }
    best.filter(|b| b.cost < node_cost)
}

fn grow_class_node(
    data: &Dataset,
    y: &[f64],
    w: &[f64],
    rows: Vec<usize>,
    depth: usize,
    budget: usize,
    min_leaf_size: usize,
) -> ClassNode {
    let (w0, w1) = class_weights(&rows, y, w);
    let (class, cost) = majority_cost(w0, w1);
    if depth >= budget || cost == 0.0 {
        return ClassNode::Leaf { class };
    }
    let Some(split) = best_class_split(data, y, w, &rows, min_leaf_size) else {
        return ClassNode::Leaf { class };
    };
    let column = data.feature(split.feature);
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&i| column[i] <= split.threshold);
    debug_assert_eq!(left_rows.len(), split.left_count);
    ClassNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow_class_node(
            data, y, w, left_rows, depth + 1, budget, min_leaf_size,
        )),
        right: Box::new(grow_class_node(
            data, y, w, right_rows, depth + 1, budget, min_leaf_size,
        )),
    }
}

/// Fit an AdaBoost ensemble of up to `n_rounds` classifier trees grown under
/// `stump_config` (max_depth 1 gives classic stumps). The response must hold
/// both classes, each encoded exactly as 0.0 or 1.0.
pub fn fit_adaboost(
    data: &Dataset,
    n_rounds: usize,
    stump_config: &TreeConfig,
) -> Result<AdaBoostModel> {
    if n_rounds == 0 {
        return Err(Error::contract("adaboost needs at least one round"));
    }
    stump_config.validate()?;
    let y = data.target();
    if let Some(v) = y.iter().find(|&&v| v != 0.0 && v != 1.0) {
        return Err(Error::contract(format!(
            "adaboost response must be 0 or 1, found {}",
            v
        )));
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones == 0 || ones == y.len() {
        return Err(Error::contract(
            "adaboost needs both classes in the training response",
        ));
    }
    let n = data.n_rows();
    let mut w = vec![1.0 / n as f64; n];
    let rows: Vec<usize> = (0..n).collect();
    let mut stages = Vec::new();
    for _ in 0..n_rounds {
        let tree = grow_class_node(
            data,
            y,
            &w,
            rows.clone(),
            0,
            stump_config.max_depth,
            stump_config.min_leaf_size,
        );
        let missed: Vec<bool> = (0..n)
            .map(|i| f64::from(tree.predict_row(data, i)) != y[i])
            .collect();
        let total: f64 = w.iter().sum();
        let err: f64 = (0..n).filter(|&i| missed[i]).map(|i| w[i]).sum::<f64>() / total;
        if err == 0.0 {
            stages.push(AdaBoostStage {
                tree,
                vote_weight: perfect_stage_vote(),
            });
            break;
        }
        if err >= 0.5 {
            // No better than chance on the current weights; a nonpositive
            // vote would only hurt, so stop without this stage.
            break;
        }
        let alpha = vote_weight(err);
        stages.push(AdaBoostStage {
            tree,
            vote_weight: alpha,
        });
        let scale = alpha.exp();
        for i in 0..n {
            if missed[i] {
                w[i] *= scale;
            }
        }
        let sum: f64 = w.iter().sum();
        for wi in &mut w {
            *wi /= sum;
        }
    }
    Ok(AdaBoostModel {
        stages,
        classes: [0, 1],
    })
}

/// Weighted vote over the stages; ties go to class 0.
pub fn predict_adaboost(model: &AdaBoostModel, x: &[f64]) -> u8 {
    let mut votes = [0.0f64; 2];
    for stage in &model.stages {
        votes[stage.tree.predict(x) as usize] += stage.vote_weight;
    }
    if votes[1] > votes[0] {
        1
    } else {
        0
    }
}

pub fn predict_adaboost_batch(model: &AdaBoostModel, data: &Dataset) -> Vec<u8> {
    (0..data.n_rows())
        .map(|i| {
            let mut votes = [0.0f64; 2];
            for stage in &model.stages {
                votes[stage.tree.predict_row(data, i) as usize] += stage.vote_weight;
            }
            u8::from(votes[1] > votes[0])
        })
        .collect()
}
