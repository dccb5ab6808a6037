//! Predictive information criterion for choosing the cardinality `q`.
//!
//! The complexity of a row-sparse `p × m` coefficient block with `J`
//! nonzero rows is `P = J·m + J·log(e·p/J)`. Two scores are offered: the
//! known-scale form `l0 + A·P` and the scale-free form
//! `m·n·log(RSS) + A·P`, which requires `δ = A·P/(m·n) < 1`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::scalar::{norm_sq, Scalar};
use crate::solver::{fit, FitResult, Problem, SolverConfig};

/// `J·m + J·log(e·p/J)`, zero at `J = 0`.
pub fn complexity_penalty(j: usize, m: usize, p: usize) -> Result<f64> {
    if j > p {
        return Err(Error::InvalidParameter(format!("support size {j} exceeds p = {p}")));
    }
    if j == 0 {
        return Ok(0.0);
    }
    let (j, m, p) = (j as f64, m as f64, p as f64);
    Ok(j * m + j * (1.0 + (p / j).ln()))
}

pub fn pic_known_scale(loss_value: f64, j: usize, m: usize, p: usize, a: f64) -> Result<f64> {
    check_a(a)?;
    Ok(loss_value + a * complexity_penalty(j, m, p)?)
}

pub fn pic_scale_free(rss: f64, n: usize, m: usize, j: usize, p: usize, a: f64) -> Result<f64> {
    check_a(a)?;
    if rss.is_nan() || rss <= 0.0 {
        return Err(Error::NonpositiveRss(rss));
    }
    let pen = complexity_penalty(j, m, p)?;
    let mn = (m * n) as f64;
    let delta = a * pen / mn;
    if delta >= 1.0 {
        return Err(Error::InadmissibleModel { delta });
    }
    Ok(mn * rss.ln() + a * pen)
}

fn check_a(a: f64) -> Result<()> {
    if a >= 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("A = {a} must be nonnegative")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Criterion {
    KnownScale(f64),
    ScaleFree(f64),
}

impl Criterion {
    pub fn constant(&self) -> f64 {
        match *self {
            Criterion::KnownScale(a) | Criterion::ScaleFree(a) => a,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SelectionEntry<T: Scalar> {
    pub q: usize,
    /// `None` when the model was excluded; see `skipped`.
    pub score: Option<f64>,
    pub skipped: Option<String>,
    pub support_size: usize,
    pub loss_value: f64,
    pub rss: f64,
    pub fit: FitResult<T>,
}

#[derive(Clone, Debug)]
pub struct SelectionResult<T: Scalar> {
    pub entries: Vec<SelectionEntry<T>>,
    pub chosen_q: usize,
    /// Position of `chosen_q` in `entries`.
    pub chosen: usize,
}

impl<T: Scalar> SelectionResult<T> {
    pub fn chosen_fit(&self) -> &FitResult<T> {
        &self.entries[self.chosen].fit
    }
}

/// Fits every `q` in `q_grid` (with refitting) and returns the one with the
/// smallest criterion. Fits run in parallel; ties go to the smaller `q`.
pub fn select_q<T: Scalar>(
    problem: &Problem<T>,
    q_grid: &[usize],
    template: &SolverConfig,
    criterion: Criterion,
) -> Result<SelectionResult<T>> {
    if q_grid.is_empty() {
        return Err(Error::InvalidParameter("empty q grid".into()));
    }
    if q_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("q grid must be strictly ascending".into()));
    }
    check_a(criterion.constant())?;
    if matches!(criterion, Criterion::ScaleFree(_)) && problem.loss().kind == LossKind::Logistic {
        return Err(Error::InvalidParameter(
            "the scale-free criterion needs a quadratic loss".into(),
        ));
    }
    let fits: Vec<Result<FitResult<T>>> = q_grid
        .par_iter()
        .map(|&q| {
            let mut config = template.clone().with_q(q);
            config.refit = true;
            fit(problem, &config)
        })
        .collect();

    let (n, m, p) = (problem.n(), problem.m(), problem.p());
    let y_norm = norm_sq(problem.response().iter());
    let mut entries = Vec::with_capacity(q_grid.len());
    for (&q, fitted) in q_grid.iter().zip(fits) {
        let fit = fitted?;
        let xb = problem.predict(fit.coefficients.view(), fit.intercept.as_ref().map(|b| b.view()))?;
        let loss_value = problem.loss().value(xb.view(), problem.response())?;
        let resid = &problem.response() - &xb;
        let rss = norm_sq(resid.iter());
        let j = fit.support.len();
        let (score, skipped) = match criterion {
            Criterion::KnownScale(a) => (Some(pic_known_scale(loss_value, j, m, p, a)?), None),
            Criterion::ScaleFree(a) => {
                if rss <= f64::EPSILON * y_norm {
                    (None, Some(format!("interpolating fit (rss = {rss:e})")))
                } else {
                    match pic_scale_free(rss, n, m, j, p, a) {
                        Ok(s) => (Some(s), None),
                        Err(Error::InadmissibleModel { delta }) => {
                            (None, Some(format!("inadmissible (delta = {delta:.4} >= 1)")))
                        }
                        Err(e) => return Err(e),
                    }
                }
            }
        };
        entries.push(SelectionEntry { q, score, skipped, support_size: j, loss_value, rss, fit });
    }
    let chosen = entries
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.score.map(|s| (i, s)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .ok_or(Error::AllInadmissible)?;
    Ok(SelectionResult { chosen_q: entries[chosen].q, chosen, entries })
}
