//! Synthetic regression data: random sums of Gaussian bumps plus
//! heteroscedastic noise.
//!
//! A sampled spec has one term per signal column. Each term j carries a
//! coefficient a_j ~ U[-1,1], an ordered subset of n_j signal columns (the
//! head of a fresh uniform permutation, n_j = clamp(floor(1.5 + Exp(2)), 1,
//! p_signal)), a center mu_j ~ N(0, I), and a shape matrix V_j = U D U^T
//! where U is Haar-random orthonormal (QR of a Gaussian matrix with the R
//! diagonal sign-normalized) and D has diagonal d with sqrt(d) ~ U[0.1, 2],
//! so V_j's eigenvalues lie in [0.01, 4]. The signal at x is
//! sum_j a_j * exp(-1/2 (z_j - mu_j)^T V_j (z_j - mu_j)) with z_j gathering
//! x at the term's feature indices; noise columns are never read.
//!
//! Generation draws an n x (p_signal + p_noise) standard-normal feature
//! matrix row by row, evaluates the signal per row, takes the sample median
//! of those n signal values, and adds per-row noise with variance
//! |signal_i - median| (a row sitting exactly at the median gets no noise).
//!
//! Draw order is part of the determinism contract. Per term, in order:
//! coefficient, the Exp draw behind n_j, the index permutation, the center,
//! the sqrt-eigenvalues, then the Gaussian matrix behind U (row-major).
//! Generation draws features row-major from the stream's "features" child,
//! then one standard-normal per row from the "noise" child, scaled by the
//! row's noise standard deviation.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanTerm {
    pub coefficient: f64,
    /// Signal-column indices gathered into the term's input, length n_j.
    pub feature_indices: Vec<usize>,
    /// Bump center, length n_j.
    pub center: Vec<f64>,
    /// Symmetric positive-definite shape matrix, n_j x n_j, row-major.
    pub shape: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanSpec {
    pub p_signal: usize,
    pub p_noise: usize,
    /// Master seed of the stream the spec was drawn from, for replay.
    pub seed: u64,
    pub terms: Vec<FriedmanTerm>,
}

impl FriedmanSpec {
    pub fn n_features(&self) -> usize {
        self.p_signal + self.p_noise
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedData {
    pub dataset: Dataset,
    /// Noise-free target per row.
    pub signal: Vec<f64>,
    pub median_signal: f64,
    pub spec_seed: u64,
    pub data_seed: u64,
}

/// Draw a random target function over `p_signal` signal columns (plus
/// `p_noise` inert columns recorded for generation). One term per signal
/// column.
pub fn sample_spec(p_signal: usize, p_noise: usize, stream: &RngStream) -> Result<FriedmanSpec> {
    if p_signal == 0 {
        return Err(Error::contract("friedman spec needs at least one signal column"));
    }
    let exp = Exp::new(2.0).expect("fixed positive rate");
    let mut terms = Vec::with_capacity(p_signal);
    for j in 0..p_signal {
        let mut rng = stream.child("term").child(j).rng();
        let coefficient = rng.random_range(-1.0..=1.0);
        let r: f64 = exp.sample(&mut rng);
        let n_j = ((1.5 + r).floor() as usize).clamp(1, p_signal);
        let mut permutation: Vec<usize> = (0..p_signal).collect();
        permutation.shuffle(&mut rng);
        permutation.truncate(n_j);
        let center: Vec<f64> = (0..n_j).map(|_| rng.sample(StandardNormal)).collect();
        let sqrt_eigen: Vec<f64> = (0..n_j).map(|_| rng.random_range(0.1..=2.0)).collect();
        let gauss: Vec<f64> = (0..n_j * n_j).map(|_| rng.sample(StandardNormal)).collect();
        terms.push(FriedmanTerm {
            coefficient,
            feature_indices: permutation,
            center,
            shape: random_shape_matrix(&sqrt_eigen, gauss),
        });
    }
    Ok(FriedmanSpec {
        p_signal,
        p_noise,
        seed: stream.master_seed(),
        terms,
    })
}

/// Build U D U^T from sqrt-eigenvalues and the Gaussian draws behind U.
/// The product is symmetrized explicitly so stored matrices are symmetric
/// to the bit, not merely up to rounding.
fn random_shape_matrix(sqrt_eigen: &[f64], gauss: Vec<f64>) -> Vec<Vec<f64>> {
    let n = sqrt_eigen.len();
    let (mut q, r) = DMatrix::from_row_slice(n, n, &gauss).qr().unpack();
    for l in 0..n {
        if r[(l, l)] < 0.0 {
            for k in 0..n {
                q[(k, l)] = -q[(k, l)];
            }
        }
    }
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        sqrt_eigen.iter().map(|s| s * s),
    ));
    let v = &q * d * q.transpose();
    (0..n)
        .map(|row| {
            (0..n)
                .map(|col| (v[(row, col)] + v[(col, row)]) / 2.0)
                .collect()
        })
        .collect()
}

/// Evaluate the noise-free target at one observation. Only the signal
/// columns referenced by the terms are read.
pub fn evaluate_signal(spec: &FriedmanSpec, x: &[f64]) -> f64 {
    debug_assert!(x.len() >= spec.p_signal);
    let mut total = 0.0;
    for term in &spec.terms {
        let diff: Vec<f64> = term
            .feature_indices
            .iter()
            .zip(&term.center)
            .map(|(&idx, &c)| x[idx] - c)
            .collect();
        let mut quad = 0.0;
        for (row, d_row) in diff.iter().enumerate() {
            let mut s = 0.0;
            for (col, d_col) in diff.iter().enumerate() {
                s += term.shape[row][col] * d_col;
            }
            quad += d_row * s;
        }
        total += term.coefficient * (-0.5 * quad).exp();
    }
    total
}

/// Sample median: mean of the two middle order statistics for even lengths.
pub fn sample_median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::contract("median of an empty sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    Ok(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    })
}

/// Draw a dataset of `n` rows under the spec: standard-normal features,
/// target = signal + noise with per-row noise variance |signal - median|.
pub fn generate(spec: &FriedmanSpec, n: usize, stream: &RngStream) -> Result<GeneratedData> {
    if n == 0 {
        return Err(Error::contract("friedman generation needs at least one row"));
    }
    let p = spec.n_features();
    let mut columns = vec![Vec::with_capacity(n); p];
    let mut feature_rng = stream.child("features").rng();
    for _ in 0..n {
        for column in columns.iter_mut() {
            column.push(feature_rng.sample::<f64, _>(StandardNormal));
        }
    }
    let mut row = vec![0.0; p];
    let signal: Vec<f64> = (0..n)
        .map(|i| {
            for (j, column) in columns.iter().enumerate() {
                row[j] = column[i];
            }
            evaluate_signal(spec, &row)
        })
        .collect();
    let median_signal = sample_median(&signal)?;
    let mut noise_rng = stream.child("noise").rng();
    let target: Vec<f64> = signal
        .iter()
        .map(|&s| {
            let sd = (s - median_signal).abs().sqrt();
            s + sd * noise_rng.sample::<f64, _>(StandardNormal)
        })
        .collect();
    Ok(GeneratedData {
        dataset: Dataset::with_default_names(columns, target)?,
        signal,
        median_signal,
        spec_seed: spec.seed,
        data_seed: stream.master_seed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn one_term_spec(term: FriedmanTerm, p_signal: usize, p_noise: usize) -> FriedmanSpec {
        FriedmanSpec {
            p_signal,
            p_noise,
            seed: 0,
            terms: vec![term],
        }
    }

    #[test]
    fn spec_sampling_is_deterministic() {
        let stream = RngStream::new(11).child("spec");
        let a = sample_spec(6, 2, &stream).unwrap();
        let b = sample_spec(6, 2, &stream).unwrap();
        assert_eq!(a, b);
        let c = sample_spec(6, 2, &RngStream::new(12).child("spec")).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn sampled_specs_satisfy_their_invariants() {
        for seed in 0..20u64 {
            let spec = sample_spec(8, 3, &RngStream::new(seed).child("spec")).unwrap();
            assert_eq!(spec.terms.len(), 8);
            for term in &spec.terms {
                assert!(term.coefficient >= -1.0 && term.coefficient <= 1.0);
                let n_j = term.feature_indices.len();
                assert!(n_j >= 1 && n_j <= 8);
                assert_eq!(term.center.len(), n_j);
                assert_eq!(term.shape.len(), n_j);
                let mut sorted = term.feature_indices.clone();
                sorted.sort_unstable();
                sorted.dedup();
                assert_eq!(sorted.len(), n_j, "indices must be distinct");
                assert!(sorted.iter().all(|&i| i < 8));
                for row in 0..n_j {
                    assert_eq!(term.shape[row].len(), n_j);
                    for col in 0..n_j {
                        assert_eq!(
                            term.shape[row][col].to_bits(),
                            term.shape[col][row].to_bits(),
                            "shape matrices are symmetrized exactly"
                        );
                    }
                }
                let flat: Vec<f64> = term.shape.iter().flatten().copied().collect();
                let m = DMatrix::from_row_slice(n_j, n_j, &flat);
                let eigen = SymmetricEigen::new(m);
                for &lambda in eigen.eigenvalues.iter() {
                    assert!(
                        lambda >= 0.01 - 1e-9 && lambda <= 4.0 + 1e-9,
                        "eigenvalue {} outside [0.01, 4]",
                        lambda
                    );
                }
            }
        }
    }

    #[test]
    fn single_signal_column_forces_scalar_terms() {
        let spec = sample_spec(1, 4, &RngStream::new(3).child("spec")).unwrap();
        for term in &spec.terms {
            assert_eq!(term.feature_indices, vec![0]);
            assert_eq!(term.shape.len(), 1);
            let v = term.shape[0][0];
            assert!(v >= 0.01 && v <= 4.0);
        }
    }

    #[test]
    fn term_dimensions_match_a_direct_simulation_of_the_size_formula() {
        // With 40 signal columns the clamp is inert, so the sampled n_j
        // should track floor(1.5 + Exp(2)) simulated directly.
        let mut total = 0usize;
        let mut count = 0usize;
        for seed in 0..250u64 {
            let spec = sample_spec(40, 0, &RngStream::new(seed).child("sizes")).unwrap();
            for term in &spec.terms {
                total += term.feature_indices.len();
                count += 1;
            }
        }
        let sampled_mean = total as f64 / count as f64;
        let exp = Exp::new(2.0).unwrap();
        let mut rng = RngStream::new(999).child("oracle").rng();
        let oracle_mean = (0..200_000)
            .map(|_| (1.5 + exp.sample(&mut rng) as f64).floor())
            .sum::<f64>()
            / 200_000.0;
        assert!(
            (sampled_mean - oracle_mean).abs() < 0.03,
            "mean term size {} vs simulated {}",
            sampled_mean,
            oracle_mean
        );
    }

    #[test]
    fn signal_closed_forms() {
        let term = FriedmanTerm {
            coefficient: 1.0,
            feature_indices: vec![0],
            center: vec![0.7],
            shape: vec![vec![2.5]],
        };
        let spec = one_term_spec(term, 1, 0);
        // At the center the bump is exp(0) = 1 regardless of shape.
        assert_eq!(evaluate_signal(&spec, &[0.7]), 1.0);

        let unit = FriedmanTerm {
            coefficient: 1.0,
            feature_indices: vec![0],
            center: vec![0.0],
            shape: vec![vec![1.0]],
        };
        let spec = one_term_spec(unit, 1, 0);
        assert_eq!(
            evaluate_signal(&spec, &[1.0]).to_bits(),
            (-0.5f64).exp().to_bits()
        );

        let zero = FriedmanTerm {
            coefficient: 0.0,
            feature_indices: vec![0],
            center: vec![0.3],
            shape: vec![vec![1.0]],
        };
        let spec = one_term_spec(zero, 1, 0);
        assert_eq!(evaluate_signal(&spec, &[123.0]), 0.0);
    }

    #[test]
    fn noise_columns_never_touch_the_signal() {
        let spec = sample_spec(5, 3, &RngStream::new(21).child("spec")).unwrap();
        let mut rng = RngStream::new(22).child("x").rng();
        for _ in 0..50 {
            let mut x: Vec<f64> = (0..8).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let base = evaluate_signal(&spec, &x);
            for noise_col in 5..8 {
                x[noise_col] = rng.random_range(-100.0..100.0);
            }
            assert_eq!(base.to_bits(), evaluate_signal(&spec, &x).to_bits());
        }
    }

    #[test]
    fn signal_is_bounded_by_the_coefficient_mass() {
        let spec = sample_spec(6, 0, &RngStream::new(31).child("spec")).unwrap();
        let bound: f64 = spec.terms.iter().map(|t| t.coefficient.abs()).sum();
        let mut rng = RngStream::new(32).child("x").rng();
        for _ in 0..200 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-4.0..4.0)).collect();
            let s = evaluate_signal(&spec, &x);
            assert!(s.abs() <= bound + 1e-12, "|{}| > {}", s, bound);
        }
    }

    #[test]
    fn shape_quadratic_forms_are_nonnegative() {
        let spec = sample_spec(7, 0, &RngStream::new(41).child("spec")).unwrap();
        let mut rng = RngStream::new(42).child("v").rng();
        for term in &spec.terms {
            let n = term.shape.len();
            for _ in 0..100 {
                let v: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                let mut quad = 0.0;
                for r in 0..n {
                    for c in 0..n {
                        quad += v[r] * term.shape[r][c] * v[c];
                    }
                }
                assert!(quad >= -1e-12, "indefinite shape: {}", quad);
            }
        }
    }

    #[test]
    fn generation_is_byte_deterministic() {
        let spec = sample_spec(4, 2, &RngStream::new(51)).unwrap();
        let a = generate(&spec, 60, &RngStream::new(52)).unwrap();
        let b = generate(&spec, 60, &RngStream::new(52)).unwrap();
        assert_eq!(
            a.dataset.to_csv_string(),
            b.dataset.to_csv_string(),
            "same seeds must reproduce the CSV byte for byte"
        );
        assert_eq!(a.signal, b.signal);
        assert_eq!(a.spec_seed, 51);
        assert_eq!(a.data_seed, 52);
        let c = generate(&spec, 60, &RngStream::new(53)).unwrap();
        assert_ne!(a.dataset.to_csv_string(), c.dataset.to_csv_string());
    }

    #[test]
    fn median_handles_odd_and_even_lengths() {
        assert_eq!(sample_median(&[3.0, 1.0, 2.0]).unwrap(), 2.0);
        assert_eq!(sample_median(&[4.0, 1.0, 2.0, 3.0]).unwrap(), 2.5);
        assert!(sample_median(&[]).is_err());
    }

    #[test]
    fn median_row_carries_no_noise() {
        let spec = sample_spec(3, 0, &RngStream::new(61)).unwrap();
        // Odd row count: some row's signal is exactly the sample median.
        let data = generate(&spec, 201, &RngStream::new(62)).unwrap();
        let hit = data
            .signal
            .iter()
            .position(|&s| s == data.median_signal)
            .expect("odd-length median is attained by a row");
        assert_eq!(data.dataset.target()[hit], data.signal[hit]);
    }

    #[test]
    fn feature_columns_look_standard_normal() {
        let spec = sample_spec(5, 5, &RngStream::new(71)).unwrap();
        let n = 4000;
        let data = generate(&spec, n, &RngStream::new(72)).unwrap();
        let band = 4.0 / (n as f64).sqrt();
        for j in 0..10 {
            let col = data.dataset.feature(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            assert!(mean.abs() < band, "column {} mean {}", j, mean);
            assert!((var.sqrt() - 1.0).abs() < band, "column {} std {}", j, var.sqrt());
        }
    }

    #[test]
    fn spec_serialization_round_trips() {
        let spec = sample_spec(4, 1, &RngStream::new(81)).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        let back: FriedmanSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec, back);
    }
}
