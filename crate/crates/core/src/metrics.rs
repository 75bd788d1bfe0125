//! Evaluation metrics.

use crate::error::{Error, Result};

/// Mean squared error between predictions and observed values.
/// The two slices must be nonempty and equally long.
pub fn mse(predictions: &[f64], actuals: &[f64]) -> Result<f64> {
    if predictions.len() != actuals.len() {
        return Err(Error::contract(format!(
            "mse length mismatch: {} predictions vs {} actuals",
            predictions.len(),
            actuals.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::contract("mse of empty vectors"));
    }
    let sum: f64 = predictions
        .iter()
        .zip(actuals)
        .map(|(p, a)| (p - a) * (p - a))
        .sum();
    Ok(sum / predictions.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn hand_values() {
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        // (1-2)^2 = 1 and (2-5)^2 = 9, mean 5.
        assert_eq!(mse(&[1.0, 2.0], &[2.0, 5.0]).unwrap(), 5.0);
    }

    #[test]
    fn length_mismatch_is_error() {
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mse(&[], &[]).is_err());
    }

    #[test]
    fn constant_prediction_matches_brute_force_spread() {
        // mse(c, y) must equal the mean squared deviation of y around c,
        // computed here by an explicit loop.
        let mut rng = RngStream::new(11).child("m").rng();
        for _ in 0..10 {
            let n = rng.random_range(2..30);
            let c: f64 = rng.random_range(-5.0..5.0);
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
            let mut acc = 0.0;
            for v in &y {
                acc += (c - v) * (c - v);
            }
            let expected = acc / n as f64;
            assert_eq!(mse(&vec![c; n], &y).unwrap(), expected);
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_nonnegative(
            a in proptest::collection::vec(-1e6f64..1e6, 1..50),
            shift in -1e3f64..1e3,
        ) {
            let b: Vec<f64> = a.iter().map(|v| v + shift).collect();
            let ab = mse(&a, &b).unwrap();
            let ba = mse(&b, &a).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(mse(&a, &a).unwrap(), 0.0);
        }
    }
}
