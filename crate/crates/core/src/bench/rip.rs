//! Monte-Carlo estimates of restricted isometry numbers.
//!
//! `ρ₋(s)` and `ρ₊(s)` bound `‖Xβ‖²/‖β‖²` over `s`-sparse `β`. Sampling
//! `s`-subsets `I` and taking the extreme eigenvalues of `X_IᵀX_I` gives
//! inner bounds: `ρ̂₋ ≥ ρ₋(s)` and `ρ̂₊ ≤ ρ₊(s)`.

use itertools::Itertools;
use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::Serialize;

use super::rng::{derive_seed, substream};
use super::synthetic::{gen_design_rows, CovKind};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RipEstimate {
    pub rho_minus: f64,
    pub rho_plus: f64,
}

/// Full Gram matrix of a design, from which subset blocks are cut.
#[derive(Clone, Debug)]
pub struct GramSampler {
    gram: Array2<f64>,
}

impl GramSampler {
    pub fn new(x: ArrayView2<f64>) -> Self {
        GramSampler { gram: x.t().dot(&x) }
    }

    pub fn p(&self) -> usize {
        self.gram.nrows()
    }

    /// `(λ_min, λ_max)` of `X_IᵀX_I`.
    pub fn extremes(&self, subset: &[usize]) -> (f64, f64) {
        let k = subset.len();
        let block = DMatrix::from_fn(k, k, |a, b| self.gram[[subset[a], subset[b]]]);
        let ev = block.symmetric_eigenvalues();
        (ev.min(), ev.max())
    }

    /// Extremes over `samples` uniform `s`-subsets. Sample `j` depends only
    /// on `(seed, s, j)`, so more samples refine the same estimate.
    pub fn estimate(&self, s: usize, samples: usize, seed: u64) -> Result<RipEstimate> {
        check_size(s, self.p())?;
        if samples == 0 {
            return Err(Error::InvalidParameter("need at least one sample".into()));
        }
        let label = format!("rip-sample-{s}");
        let mut est = RipEstimate { rho_minus: f64::INFINITY, rho_plus: f64::NEG_INFINITY };
        for j in 0..samples {
            let mut rng = substream(seed, &label, j as u64);
            let mut subset = rand::seq::index::sample(&mut rng, self.p(), s).into_vec();
            subset.sort_unstable();
            let (lo, hi) = self.extremes(&subset);
            est.rho_minus = est.rho_minus.min(lo);
            est.rho_plus = est.rho_plus.max(hi);
        }
        Ok(est)
    }

    /// Extremes over every `s`-subset.
    pub fn exhaustive(&self, s: usize) -> Result<RipEstimate> {
        check_size(s, self.p())?;
        let mut est = RipEstimate { rho_minus: f64::INFINITY, rho_plus: f64::NEG_INFINITY };
        for subset in (0..self.p()).combinations(s) {
            let (lo, hi) = self.extremes(&subset);
            est.rho_minus = est.rho_minus.min(lo);
            est.rho_plus = est.rho_plus.max(hi);
        }
        Ok(est)
    }
}

fn check_size(s: usize, p: usize) -> Result<()> {
    if s == 0 || s > p {
        Err(Error::InvalidParameter(format!("subset size {s} not in 1..={p}")))
    } else {
        Ok(())
    }
}

pub fn estimate_rip(x: ArrayView2<f64>, s: usize, samples: usize, seed: u64) -> Result<RipEstimate> {
    check_size(s, x.ncols())?;
    GramSampler::new(x).estimate(s, samples, seed)
}

pub fn estimate_rip_exhaustive(x: ArrayView2<f64>, s: usize) -> Result<RipEstimate> {
    check_size(s, x.ncols())?;
    GramSampler::new(x).exhaustive(s)
}

/// `4θ ρ₋(q+s)² / ρ₊(2q)²` with `q = θs`.
pub fn rip_ratio(theta: usize, lower: RipEstimate, upper: RipEstimate) -> f64 {
    4.0 * theta as f64 * lower.rho_minus.powi(2) / upper.rho_plus.powi(2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub theta: usize,
    pub q: usize,
    pub mean_ratio: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveSpec {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub tau: f64,
    pub cov: CovKind,
    pub theta_grid: Vec<usize>,
    pub samples: usize,
    /// Enumerate every subset instead of sampling; for small `p` only.
    pub exhaustive: bool,
    pub reps: usize,
    pub seed: u64,
}

/// Mean ratio per `θ` over `reps` designs. Each replicate design is shared
/// by every `θ`.
pub fn rip_ratio_curve(spec: &CurveSpec) -> Result<Vec<CurvePoint>> {
    if spec.reps == 0 || spec.theta_grid.is_empty() {
        return Err(Error::InvalidParameter("need reps >= 1 and a nonempty theta grid".into()));
    }
    let max_theta = *spec.theta_grid.iter().max().expect("nonempty");
    if spec.theta_grid.contains(&0) || 2 * max_theta * spec.s > spec.p {
        return Err(Error::InvalidParameter(format!(
            "theta grid needs 1 <= theta and theta*s <= p/2 (p = {}, s = {})",
            spec.p, spec.s
        )));
    }
    let ratios: Vec<Vec<f64>> = (0..spec.reps)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let seed = derive_seed(spec.seed, &format!("replicate-{k}"));
            let x = gen_design_rows(spec.n, spec.p, spec.cov, spec.tau, seed, "design")?;
            let sampler = GramSampler::new(x.view());
            spec.theta_grid
                .iter()
                .map(|&theta| {
                    let q = theta * spec.s;
                    let (lower, upper) = if spec.exhaustive {
                        (sampler.exhaustive(q + spec.s)?, sampler.exhaustive(2 * q)?)
                    } else {
                        (
                            sampler.estimate(q + spec.s, spec.samples, seed)?,
                            sampler.estimate(2 * q, spec.samples, seed)?,
                        )
                    };
                    Ok(rip_ratio(theta, lower, upper))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(spec
        .theta_grid
        .iter()
        .enumerate()
        .map(|(i, &theta)| {
            let vals: Vec<f64> = ratios.iter().map(|r| r[i]).collect();
            let (mean_ratio, stderr) = mean_stderr(&vals);
            CurvePoint { theta, q: theta * spec.s, mean_ratio, stderr }
        })
        .collect())
}

/// Sample mean and standard error (zero for a single value).
pub fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
