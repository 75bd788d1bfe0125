//! Row and feature subsampling primitives shared by every ensemble.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A drawn set of row indices plus the settings that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSample {
    pub indices: Vec<usize>,
    pub with_replacement: bool,
    pub fraction: f64,
}

/// Uniform sample of `k` distinct values from 0..n via partial Fisher-Yates.
/// The full sample (k == n) short-circuits to natural order: the set is
/// forced anyway and the natural order costs no RNG draws, which keeps a
/// degenerate full-data sample identical to not sampling at all.
pub fn sample_without_replacement<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    assert!(k <= n, "cannot draw {} distinct indices from {}", k, n);
    if k == n {
        return (0..n).collect();
    }
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    pool.truncate(k);
    pool
}

/// Draw round(fraction * n) row indices (at least 1), with or without
/// replacement. `fraction` must lie in [0, 1] and n must be positive.
pub fn draw_sample<R: Rng>(
    n: usize,
    fraction: f64,
    with_replacement: bool,
    rng: &mut R,
) -> Result<IndexSample> {
    if n == 0 {
        return Err(Error::contract("cannot sample from an empty index range"));
    }
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::contract(format!(
            "sample fraction {} outside [0, 1]",
            fraction
        )));
    }
    let k = ((fraction * n as f64).round() as usize).max(1);
    let indices = if with_replacement {
        (0..k).map(|_| rng.random_range(0..n)).collect()
    } else {
        sample_without_replacement(n, k, rng)
    };
    Ok(IndexSample {
        indices,
        with_replacement,
        fraction,
    })
}

/// Repeated-subsampling validation splits: each fold independently draws a
/// fresh uniform train set of round(train_fraction * n) rows; its complement
/// is the fold's test set. Unlike a k-fold partition, folds may overlap.
/// Errors if either side of a fold would be empty.
pub fn subsample_folds<R: Rng>(
    n: usize,
    folds: usize,
    train_fraction: f64,
    rng: &mut R,
) -> Result<Vec<(IndexSample, IndexSample)>> {
    if folds == 0 {
        return Err(Error::contract("fold count must be positive"));
    }
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::contract(format!(
            "train fraction {} outside [0, 1]",
            train_fraction
        )));
    }
    let train_size = (train_fraction * n as f64).round() as usize;
    if train_size == 0 || train_size >= n {
        return Err(Error::contract(format!(
            "train fraction {} of {} rows leaves an empty side",
            train_fraction, n
        )));
    }
    let mut out = Vec::with_capacity(folds);
    for _ in 0..folds {
        // One full shuffle per fold: the head becomes the train set and the
        // tail the test set, so the two sides partition 0..n by construction.
        let mut perm: Vec<usize> = (0..n).collect();
        for i in 0..n - 1 {
            let j = rng.random_range(i..n);
            perm.swap(i, j);
        }
        let test = perm.split_off(train_size);
        out.push((
            IndexSample {
                indices: perm,
                with_replacement: false,
                fraction: train_fraction,
            },
            IndexSample {
                indices: test,
                with_replacement: false,
                fraction: 1.0 - train_fraction,
            },
        ));
    }
    Ok(out)
}
