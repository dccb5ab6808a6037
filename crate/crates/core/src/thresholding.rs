//! Quantile thresholding with ℓ2 shrinkage.
//!
//! `Θ#(s; q, η̄)` keeps the `q` entries of `s` with largest magnitude,
//! divides them by `1 + η̄` and zeroes the rest. The row-grouped version
//! ranks rows of a `p × m` block by their Euclidean norm instead.
//!
//! Protected coordinates (an intercept, typically) bypass both selection and
//! shrinkage and do not count toward `q`.

use std::cmp::Ordering;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieMode {
    /// Ties at the `q`-th order statistic go to the lower index.
    #[default]
    LowestIndexWins,
    /// A nonzero tie between the `q`-th and `(q+1)`-th magnitudes is an error.
    StrictError,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ThresholdPolicy {
    pub tie_mode: TieMode,
    protected: Vec<usize>,
}

impl ThresholdPolicy {
    pub fn new(tie_mode: TieMode) -> Self {
        ThresholdPolicy { tie_mode, protected: Vec::new() }
    }

    pub fn with_protected(mut self, idx: impl IntoIterator<Item = usize>) -> Self {
        self.protected.extend(idx);
        self.protected.sort_unstable();
        self.protected.dedup();
        self
    }

    pub fn protected(&self) -> &[usize] {
        &self.protected
    }

    fn mask(&self, p: usize) -> Result<Vec<bool>> {
        let mut mask = vec![false; p];
        for &j in &self.protected {
            if j >= p {
                return Err(Error::InvalidParameter(format!(
                    "protected index {j} out of range for length {p}"
                )));
            }
            mask[j] = true;
        }
        Ok(mask)
    }
}

/// Indices (ascending) of the `q` largest `scores` among non-protected
/// positions. Scores are magnitudes or squared row norms.
pub fn select_largest(scores: &[f64], q: usize, policy: &ThresholdPolicy) -> Result<Vec<usize>> {
    let p = scores.len();
    let mask = policy.mask(p)?;
    let free = p - policy.protected.len();
    if q > free {
        return Err(Error::InvalidParameter(format!(
            "q = {q} exceeds the {free} thresholdable coordinates"
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("thresholding input"));
    }
    let mut cand: Vec<usize> = (0..p).filter(|&j| !mask[j]).collect();
    if q == 0 {
        return Ok(Vec::new());
    }
    if q < cand.len() {
        // larger score first, then lower index
        let order = |a: &usize, b: &usize| -> Ordering {
            scores[*b].total_cmp(&scores[*a]).then(a.cmp(b))
        };
        cand.select_nth_unstable_by(q - 1, order);
        if policy.tie_mode == TieMode::StrictError {
            let kth = scores[cand[q - 1]];
            let next = cand[q..].iter().map(|&j| scores[j]).fold(f64::NEG_INFINITY, f64::max);
            if kth == next && kth != 0.0 {
                return Err(Error::TieAtQuantile { q });
            }
        }
        cand.truncate(q);
    }
    cand.sort_unstable();
    Ok(cand)
}

/// Elementwise `Θ#(s; q, η̄)`.
pub fn quantile_threshold(
    s: &[f64],
    q: usize,
    eta_bar: f64,
    policy: &ThresholdPolicy,
) -> Result<Vec<f64>> {
    check_eta(eta_bar)?;
    let scores: Vec<f64> = s.iter().map(|v| v.abs()).collect();
    let keep = select_largest(&scores, q, policy)?;
    let mut out = vec![0.0; s.len()];
    let scale = 1.0 / (1.0 + eta_bar);
    for j in keep {
        out[j] = s[j] * scale;
    }
    for &j in policy.protected() {
        out[j] = s[j];
    }
    Ok(out)
}

/// Row-grouped `vec-Θ#(S; q, η̄)` for a `p × m` block.
pub fn group_quantile_threshold<T: Scalar>(
    s: ArrayView2<T>,
    q: usize,
    eta_bar: f64,
    policy: &ThresholdPolicy,
) -> Result<Array2<T>> {
    check_eta(eta_bar)?;
    let scores: Vec<f64> = s
        .rows()
        .into_iter()
        .map(|r| r.iter().map(|v| v.modulus_squared()).sum())
        .collect();
    let keep = select_largest(&scores, q, policy)?;
    let mut out = Array2::<T>::zeros(s.raw_dim());
    let scale = 1.0 / (1.0 + eta_bar);
    for j in keep {
        out.row_mut(j).assign(&s.row(j).mapv(|v| v.scale(scale)));
    }
    for &j in policy.protected() {
        out.row_mut(j).assign(&s.row(j));
    }
    Ok(out)
}

fn check_eta(eta_bar: f64) -> Result<()> {
    if eta_bar >= 0.0 && eta_bar.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eta_bar must be a nonnegative number, got {eta_bar}")))
    }
}
