use ndarray::{ArrayView1, ArrayView2};
use serde::Serialize;

use super::synthetic::{sigma_matvec, CovKind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub miss_rate: f64,
    /// Prediction error for regression, misclassification percentage for
    /// classification.
    pub pred_error: f64,
    pub wall_time: f64,
    pub support_size: usize,
}

/// Fraction of `truth` missing from `estimate`.
pub fn miss_rate(estimate: &[usize], truth: &[usize]) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::InvalidParameter("empty true support".into()));
    }
    let missed = truth.iter().filter(|j| !estimate.contains(j)).count();
    Ok(missed as f64 / truth.len() as f64)
}

/// `10·(β̂ − β*)ᵀ Σ (β̂ − β*)`.
pub fn pred_error_regression(
    beta_hat: ArrayView1<f64>,
    beta_star: ArrayView1<f64>,
    cov: CovKind,
    tau: f64,
) -> Result<f64> {
    if beta_hat.len() != beta_star.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate of length {} vs truth of length {}",
            beta_hat.len(),
            beta_star.len()
        )));
    }
    let d = &beta_hat - &beta_star;
    Ok(10.0 * d.dot(&sigma_matvec(cov, tau, d.view())))
}

/// Percentage of test points misclassified by `1{x·β̂ + b > 0}`.
pub fn misclass_rate(
    beta_hat: ArrayView1<f64>,
    intercept: f64,
    x_test: ArrayView2<f64>,
    y_test: ArrayView1<f64>,
) -> Result<f64> {
    if x_test.ncols() != beta_hat.len() || x_test.nrows() != y_test.len() || y_test.is_empty() {
        return Err(Error::DimensionMismatch("test set shape".into()));
    }
    let eta = x_test.dot(&beta_hat);
    let wrong = eta
        .iter()
        .zip(y_test)
        .filter(|(&e, &y)| (e + intercept > 0.0) != (y > 0.5))
        .count();
    Ok(100.0 * wrong as f64 / y_test.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn miss_rate_cases() {
        assert_eq!(miss_rate(&[0, 10, 20], &[0, 10, 20]).unwrap(), 0.0);
        assert!((miss_rate(&[0, 10, 98], &[0, 10, 20]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(miss_rate(&[], &[0, 10]).unwrap(), 1.0);
        assert!(miss_rate(&[1], &[]).is_err());
    }

    #[test]
    fn pred_error_identity() {
        let b = array![1.0, 0.0, 2.0];
        assert_eq!(pred_error_regression(b.view(), b.view(), CovKind::Toeplitz, 0.5).unwrap(), 0.0);
        let e = array![1.0, 0.0, 2.0] + array![1.0, 0.0, 0.0];
        assert_eq!(pred_error_regression(e.view(), b.view(), CovKind::Identity, 0.0).unwrap(), 10.0);
    }

    #[test]
    fn misclassification_hand_count() {
        let x = array![[1.0], [-1.0], [2.0], [-0.5], [0.3], [-2.0], [0.1], [-0.1], [1.5], [-3.0]];
        let y = array![1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0];
        // predictions 1,0,1,0,1,0,1,0,1,0: rows 3, 4 and 8 are wrong
        let r = misclass_rate(array![1.0].view(), 0.0, x.view(), y.view()).unwrap();
        assert!((r - 30.0).abs() < 1e-12);
    }
}
