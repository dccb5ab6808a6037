//! Monte-Carlo comparison of slow kill against iterative hard thresholding
//! on synthetic data.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{misclass_rate, miss_rate, pred_error_regression};
use super::rip::mean_stderr;
use super::rng::derive_seed;
use super::synthetic::{generate, CovKind, Model, Signal, SyntheticSpec};
use crate::error::{Error, Result};
use crate::solver::{fit, FitResult, Problem, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    SlowKill,
    Iht,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::SlowKill => "slowkill",
            Method::Iht => "iht",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    /// Data settings; `seed` is replaced per replicate.
    pub data: SyntheticSpec,
    pub q: usize,
    pub eta0: f64,
    pub steps: usize,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Named settings: `table41-{toeplitz,equal}` (regression) and
    /// `table42-{toeplitz,equal}` (classification).
    pub fn preset(name: &str) -> Option<Self> {
        let (n, p, cov, model) = match name {
            "table41-toeplitz" => (150, 5000, CovKind::Toeplitz, Model::Regression { sigma: 1.0 }),
            "table41-equal" => (150, 5000, CovKind::EqualCorrelation, Model::Regression { sigma: 1.0 }),
            "table42-toeplitz" => (500, 2000, CovKind::Toeplitz, Model::Classification),
            "table42-equal" => (500, 2000, CovKind::EqualCorrelation, Model::Classification),
            _ => return None,
        };
        let s = 10;
        Some(ExperimentSpec {
            name: name.to_string(),
            data: SyntheticSpec { n, p, s, tau: 0.9, cov, model, signal: Signal::Magnitude(1.0), seed: 0 },
            q: s * 3 / 2,
            eta0: 50.0,
            steps: 100,
            methods: vec![Method::SlowKill, Method::Iht],
            reps: 50,
            seed: 0,
        })
    }

    pub fn classification(&self) -> bool {
        self.data.model == Model::Classification
    }

    /// Data settings for replicate `k`.
    pub fn replicate_data(&self, k: usize) -> SyntheticSpec {
        SyntheticSpec { seed: derive_seed(self.seed, &format!("replicate-{k}")), ..self.data.clone() }
    }

    pub fn solver_config(&self, method: Method) -> SolverConfig {
        let mut config = match method {
            Method::SlowKill => {
                let mut c = SolverConfig::slow_kill(self.q);
                c.eta0 = self.eta0;
                c.schedule.steps = self.steps;
                c
            }
            Method::Iht => SolverConfig::iht(self.q),
        };
        config.refit = true;
        config
    }
}

/// One method on one replicate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReplicateRecord {
    pub scenario: String,
    pub method: Method,
    pub replicate: usize,
    pub miss_rate: f64,
    /// Prediction error (regression) or misclassification percentage.
    pub error: f64,
    /// 0-based predictor indices.
    pub support: Vec<usize>,
    pub iterations: usize,
    pub line_search_warnings: usize,
    pub fixed_point_residual: f64,
    pub wall_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodSummary {
    pub scenario: String,
    pub method: Method,
    pub reps: usize,
    pub miss_mean: f64,
    pub miss_se: f64,
    pub error_mean: f64,
    pub error_se: f64,
    pub time_total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutput {
    /// Ordered by replicate, then by method as listed in the spec.
    pub records: Vec<ReplicateRecord>,
    pub summaries: Vec<MethodSummary>,
}

pub fn run_replicate(spec: &ExperimentSpec, k: usize) -> Result<Vec<ReplicateRecord>> {
    let data_spec = spec.replicate_data(k);
    let data = generate(&data_spec)?;
    let classification = spec.classification();
    let problem = if classification {
        Problem::logistic(data.x.clone(), data.y.clone(), true)?
    } else {
        Problem::regression(data.x.clone(), data.y.clone())?
    };
    spec.methods
        .iter()
        .map(|&method| {
            let clock = Instant::now();
            let result: FitResult<f64> = fit(&problem, &spec.solver_config(method))?;
            let wall_time = clock.elapsed().as_secs_f64();
            let beta = result.coefficients.column(0);
            let error = match &data.test {
                Some((xt, yt)) => {
                    let b = result.intercept.as_ref().map_or(0.0, |b| b[0]);
                    misclass_rate(beta, b, xt.view(), yt.view())?
                }
                None => pred_error_regression(beta, data.beta_star.view(), data_spec.cov, data_spec.tau)?,
            };
            Ok(ReplicateRecord {
                scenario: spec.name.clone(),
                method,
                replicate: k,
                miss_rate: miss_rate(&result.support, &data.support)?,
                error,
                support: result.support.clone(),
                iterations: result.iterations,
                line_search_warnings: result.line_search_warnings,
                fixed_point_residual: result.fixed_point_residual,
                wall_time,
            })
        })
        .collect()
}

pub fn summarize(spec: &ExperimentSpec, records: &[ReplicateRecord]) -> Vec<MethodSummary> {
    spec.methods
        .iter()
        .map(|&method| {
            let rs: Vec<&ReplicateRecord> = records.iter().filter(|r| r.method == method).collect();
            let miss: Vec<f64> = rs.iter().map(|r| r.miss_rate).collect();
            let err: Vec<f64> = rs.iter().map(|r| r.error).collect();
            let (miss_mean, miss_se) = mean_stderr(&miss);
            let (error_mean, error_se) = mean_stderr(&err);
            MethodSummary {
                scenario: spec.name.clone(),
                method,
                reps: rs.len(),
                miss_mean,
                miss_se,
                error_mean,
                error_se,
                time_total: rs.iter().map(|r| r.wall_time).sum(),
            }
        })
        .collect()
}

/// Runs all replicates (in parallel) and summarizes per method.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    if spec.reps == 0 || spec.methods.is_empty() {
        return Err(Error::InvalidParameter("need reps >= 1 and at least one method".into()));
    }
    spec.data.validate()?;
    let per_rep: Vec<Vec<ReplicateRecord>> =
        (0..spec.reps).into_par_iter().map(|k| run_replicate(spec, k)).collect::<Result<_>>()?;
    let records: Vec<ReplicateRecord> = per_rep.into_iter().flatten().collect();
    let summaries = summarize(spec, &records);
    Ok(ExperimentOutput { records, summaries })
}
