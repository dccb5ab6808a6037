//! Synthetic designs with Toeplitz or equicorrelated rows, and responses.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::substream;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovKind {
    /// `Σ_ij = τ^|i−j|`
    Toeplitz,
    /// `Σ_ij = τ` off the diagonal, 1 on it.
    EqualCorrelation,
    Identity,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    /// `y = Xβ* + ε`, `ε ~ N(0, σ²)`.
    Regression { sigma: f64 },
    /// `y = 1{Xβ* > 0}`.
    Classification,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signal {
    /// Equal nonzeros at indices `0, 10, 20, …` (0-based).
    Magnitude(f64),
    Explicit(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub tau: f64,
    pub cov: CovKind,
    pub model: Model,
    pub signal: Signal,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p < 2 || self.s == 0 {
            return Err(Error::InvalidParameter(format!(
                "need n >= 1, p >= 2, s >= 1 (n = {}, p = {}, s = {})",
                self.n, self.p, self.s
            )));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::NotPositiveDefinite(format!("tau = {} not in [0, 1)", self.tau)));
        }
        if let Model::Regression { sigma } = self.model {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidParameter(format!("sigma = {sigma}")));
            }
        }
        match &self.signal {
            Signal::Magnitude(_) => {
                if 10 * (self.s - 1) + 1 > self.p {
                    return Err(Error::InvalidParameter(format!(
                        "s = {} nonzeros spaced by 10 do not fit in p = {}",
                        self.s, self.p
                    )));
                }
            }
            Signal::Explicit(b) => {
                if b.len() != self.p {
                    return Err(Error::DimensionMismatch(format!(
                        "explicit signal of length {} for p = {}",
                        b.len(),
                        self.p
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn beta_star(&self) -> Result<Array1<f64>> {
        match &self.signal {
            Signal::Magnitude(mag) => true_beta(self.p, self.s, *mag),
            Signal::Explicit(b) => Ok(Array1::from(b.clone())),
        }
    }
}

/// `n × p` design with rows i.i.d. `N(0, Σ)`. Row `i` is drawn from the
/// stream `(seed, label, i)`.
pub fn gen_design_rows(
    n: usize,
    p: usize,
    cov: CovKind,
    tau: f64,
    seed: u64,
    label: &str,
) -> Result<Array2<f64>> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::NotPositiveDefinite(format!("tau = {tau} not in [0, 1)")));
    }
    let mut x = Array2::<f64>::zeros((n, p));
    x.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(i, mut row)| {
        let mut rng = substream(seed, label, i as u64);
        let row = row.as_slice_mut().expect("row-major");
        match cov {
            CovKind::Identity => row.iter_mut().for_each(|v| *v = rng.sample(StandardNormal)),
            // AR(1) recursion: the lower Cholesky factor of τ^|i−j| applied to z
            CovKind::Toeplitz => {
                let c = (1.0 - tau * tau).sqrt();
                let mut prev: f64 = rng.sample(StandardNormal);
                row[0] = prev;
                for v in row.iter_mut().skip(1) {
                    let z: f64 = rng.sample(StandardNormal);
                    prev = tau * prev + c * z;
                    *v = prev;
                }
            }
            // shared factor plus independent noise
            CovKind::EqualCorrelation => {
                let z0: f64 = rng.sample(StandardNormal);
                let (a, b) = (tau.sqrt() * z0, (1.0 - tau).sqrt());
                row.iter_mut().for_each(|v| *v = a + b * rng.sample::<f64, _>(StandardNormal));
            }
        }
    });
    Ok(x)
}

pub fn gen_design(spec: &SyntheticSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    gen_design_rows(spec.n, spec.p, spec.cov, spec.tau, spec.seed, "design")
}

/// `magnitude` at 0-based indices `0, 10, …, 10(s−1)`.
pub fn true_beta(p: usize, s: usize, magnitude: f64) -> Result<Array1<f64>> {
    if s == 0 || 10 * (s - 1) + 1 > p {
        return Err(Error::InvalidParameter(format!("s = {s} nonzeros spaced by 10 do not fit in p = {p}")));
    }
    let mut b = Array1::zeros(p);
    for k in 0..s {
        b[10 * k] = magnitude;
    }
    Ok(b)
}

pub fn gen_response(x: ArrayView2<f64>, beta: ArrayView1<f64>, model: Model, seed: u64) -> Result<Array1<f64>> {
    if x.ncols() != beta.len() {
        return Err(Error::DimensionMismatch(format!(
            "design has {} columns, signal has {}",
            x.ncols(),
            beta.len()
        )));
    }
    let eta = x.dot(&beta);
    Ok(match model {
        Model::Regression { sigma } => {
            let mut rng = substream(seed, "noise", 0);
            eta.mapv(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        }
        Model::Classification => eta.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }),
    })
}

/// `Σv` without forming `Σ`.
pub fn sigma_matvec(cov: CovKind, tau: f64, v: ArrayView1<f64>) -> Array1<f64> {
    let p = v.len();
    match cov {
        CovKind::Identity => v.to_owned(),
        CovKind::EqualCorrelation => {
            let total = v.sum();
            v.mapv(|d| (1.0 - tau) * d + tau * total)
        }
        // forward and backward geometric sums share the diagonal
        CovKind::Toeplitz => {
            let mut f = Array1::zeros(p);
            let mut b = Array1::zeros(p);
            let mut acc = 0.0;
            for i in 0..p {
                acc = tau * acc + v[i];
                f[i] = acc;
            }
            acc = 0.0;
            for i in (0..p).rev() {
                acc = tau * acc + v[i];
                b[i] = acc;
            }
            f + b - v
        }
    }
}

/// Dense `Σ`, for small `p`.
pub fn sigma_dense(cov: CovKind, tau: f64, p: usize) -> Array2<f64> {
    Array2::from_shape_fn((p, p), |(i, j)| match cov {
        _ if i == j => 1.0,
        CovKind::Identity => 0.0,
        CovKind::EqualCorrelation => tau,
        CovKind::Toeplitz => tau.powi(i.abs_diff(j) as i32),
    })
}

/// A training set, plus an independent test set of the same size for
/// classification.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub beta_star: Array1<f64>,
    pub support: Vec<usize>,
    pub test: Option<(Array2<f64>, Array1<f64>)>,
}

pub fn generate(spec: &SyntheticSpec) -> Result<Dataset> {
    let x = gen_design(spec)?;
    let beta_star = spec.beta_star()?;
    let y = gen_response(x.view(), beta_star.view(), spec.model, spec.seed)?;
    let support = beta_star.iter().enumerate().filter(|(_, &b)| b != 0.0).map(|(j, _)| j).collect();
    let test = match spec.model {
        Model::Classification => {
            let xt = gen_design_rows(spec.n, spec.p, spec.cov, spec.tau, spec.seed, "test-design")?;
            let yt = gen_response(xt.view(), beta_star.view(), spec.model, spec.seed)?;
            Some((xt, yt))
        }
        Model::Regression { .. } => None,
    };
    Ok(Dataset { x, y, beta_star, support, test })
}
