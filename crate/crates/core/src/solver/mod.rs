//! The slow-kill loop: cooling steps with line-searched `ρ`, optional
//! squeezing, a constant-`q` phase until the support settles, then a
//! restricted polish and optional refit.

mod polish;
mod problem;
mod state;

use std::time::Instant;

use ndarray::{Array1, Array2, ArrayView2, Axis};

pub use polish::{fixed_point_residual, polish, refit, residual_on, PolishOutcome};
pub use problem::Problem;
pub use state::{squeeze, step, SolverState, StepReport};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::schedules::ScheduleSpec;
use crate::thresholding::TieMode;

/// Upper bound on polish / resume rounds.
const MAX_POLISH_ROUNDS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub q: usize,
    pub eta0: f64,
    pub schedule: ScheduleSpec,
    pub alpha: f64,
    pub max_search: usize,
    pub squeeze: bool,
    pub squeeze_k0: u32,
    pub polish_tol: f64,
    pub polish_max_iter: usize,
    pub refit: bool,
    pub refit_ridge: f64,
    /// Cap on constant-`q` iterations after cooling.
    pub max_iter: usize,
    /// Consecutive unchanged supports that end the constant-`q` phase.
    pub stable_iters: usize,
    pub tie_mode: TieMode,
    /// Initial `ρ`; defaults to `L‖X‖₂²`.
    pub rho0: Option<f64>,
    pub power_iters: usize,
}

impl SolverConfig {
    /// Inverse cooling over 100 steps, `η0 = 50`, squeezing on.
    pub fn slow_kill(q: usize) -> Self {
        SolverConfig {
            q,
            eta0: 50.0,
            schedule: ScheduleSpec::inverse(100, q),
            alpha: 0.5,
            max_search: 5,
            squeeze: true,
            squeeze_k0: 1,
            polish_tol: 1e-8,
            polish_max_iter: 500,
            refit: false,
            refit_ridge: 1e-8,
            max_iter: 1000,
            stable_iters: 3,
            tie_mode: TieMode::LowestIndexWins,
            rho0: None,
            power_iters: 50,
        }
    }

    /// Iterative hard thresholding: constant `q`, no shrinkage.
    pub fn iht(q: usize) -> Self {
        SolverConfig {
            eta0: 0.0,
            schedule: ScheduleSpec::constant(1, q),
            squeeze: false,
            ..Self::slow_kill(q)
        }
    }

    pub fn with_q(mut self, q: usize) -> Self {
        self.q = q;
        self.schedule.target_q = q;
        self
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.q == 0 || self.q >= p {
            return Err(Error::InvalidParameter(format!("need 1 <= q < p, got q = {}, p = {p}", self.q)));
        }
        if self.schedule.target_q != self.q {
            return Err(Error::InvalidParameter(format!(
                "schedule targets q = {}, config has q = {}",
                self.schedule.target_q, self.q
            )));
        }
        self.schedule.validate(p)?;
        if !(self.eta0 >= 0.0 && self.eta0.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta0 = {}", self.eta0)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {} not in (0, 1)", self.alpha)));
        }
        if self.max_search == 0 || self.stable_iters == 0 {
            return Err(Error::InvalidParameter("max_search and stable_iters must be positive".into()));
        }
        for (name, v) in [("polish_tol", self.polish_tol), ("refit_ridge", self.refit_ridge)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be positive")));
            }
        }
        if let Some(r) = self.rho0 {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParameter(format!("rho0 = {r} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Cooling,
    Constant,
}

/// Per-step notification passed to observers.
#[derive(Clone, Debug)]
pub struct IterationEvent<'a> {
    pub phase: Phase,
    pub report: StepReport,
    pub t: usize,
    /// Active design columns after any squeeze triggered by this step.
    pub active: &'a [usize],
    /// Support in design-column indexing, protected columns excluded.
    pub support: &'a [usize],
    pub squeezed: bool,
}

/// Output of [`fit`]. Predictor indices are 0-based and exclude the
/// intercept.
#[derive(Clone, Debug)]
pub struct FitResult<T: Scalar> {
    /// `p × m` reported coefficients: the refit when requested, otherwise
    /// the polished fixed point.
    pub coefficients: Array2<T>,
    pub intercept: Option<Array1<T>>,
    /// `p × m` polished fixed point.
    pub fixed_point: Array2<T>,
    pub fixed_point_intercept: Option<Array1<T>>,
    pub support: Vec<usize>,
    /// Design columns still active at termination (includes the intercept
    /// column when present).
    pub active: Vec<usize>,
    pub objective_trace: Vec<f64>,
    pub rho_trace: Vec<f64>,
    pub q_trace: Vec<usize>,
    pub eta_bar_trace: Vec<f64>,
    /// `‖β̂ − Θ#(β̂ − ρ⁻¹Xᴴ∇l0; q, η0/ρ)‖_∞` over the active columns.
    pub fixed_point_residual: f64,
    pub rho: f64,
    pub eta_bar: f64,
    pub q: usize,
    pub line_search_warnings: usize,
    pub polish_rounds: usize,
    pub polish_singular: bool,
    pub refit_singular: bool,
    pub iterations: usize,
    pub wall_time: f64,
}

impl<T: Scalar> FitResult<T> {
    pub fn converged(&self, tol: f64) -> bool {
        self.fixed_point_residual <= tol
    }

    /// Polished fixed point in design-column indexing, restricted to
    /// `active`; the input expected by [`residual_on`].
    pub fn active_fixed_point(&self) -> Array2<T> {
        let m = self.fixed_point.ncols();
        let mut out = Array2::zeros((self.active.len(), m));
        let offset = usize::from(self.fixed_point_intercept.is_some());
        for (r, &j) in self.active.iter().enumerate() {
            if j < offset {
                if let Some(b) = &self.fixed_point_intercept {
                    out.row_mut(r).assign(b);
                }
            } else {
                out.row_mut(r).assign(&self.fixed_point.row(j - offset));
            }
        }
        out
    }
}

pub fn fit<T: Scalar>(problem: &Problem<T>, config: &SolverConfig) -> Result<FitResult<T>> {
    fit_observed(problem, config, None, |_| {})
}

/// [`fit`] from a warm start (`p × m`, predictor indexing).
pub fn fit_from<T: Scalar>(
    problem: &Problem<T>,
    config: &SolverConfig,
    start: ArrayView2<T>,
) -> Result<FitResult<T>> {
    if start.dim() != (problem.p(), problem.m()) {
        return Err(Error::DimensionMismatch(format!(
            "warm start {:?}, expected {:?}",
            start.dim(),
            (problem.p(), problem.m())
        )));
    }
    let mut full = Array2::zeros((problem.design().ncols(), problem.m()));
    full.slice_mut(ndarray::s![problem.offset().., ..]).assign(&start);
    fit_observed(problem, config, Some(full.view()), |_| {})
}

/// [`fit`] with an optional design-indexed warm start and a per-step
/// observer.
pub fn fit_observed<T: Scalar>(
    problem: &Problem<T>,
    config: &SolverConfig,
    start: Option<ArrayView2<T>>,
    mut observer: impl FnMut(&IterationEvent),
) -> Result<FitResult<T>> {
    let clock = Instant::now();
    let p = problem.p();
    config.validate(p)?;
    let all: Vec<usize> = (0..problem.design().ncols()).collect();
    let rho0 = match config.rho0 {
        Some(r) => r,
        None => {
            let r = problem.loss().lipschitz() * problem.design().spectral_norm_sq(&all, config.power_iters);
            if r > 0.0 && r.is_finite() { r } else { 1.0 }
        }
    };
    let mut state = SolverState::new(problem, start, rho0, config.tie_mode)?;
    let cooling = config.schedule.is_cooling(p);
    let squeezing = config.squeeze && cooling;
    let mut level = config.squeeze_k0;

    for _ in 0..config.schedule.steps {
        let report = step(&mut state, problem, config)?;
        let mut squeezed = false;
        if squeezing {
            while level < 64 && (report.q as f64) < p as f64 / 2f64.powi(level as i32) {
                level += 1;
                squeezed = true;
            }
            if squeezed {
                squeeze(&mut state);
            }
        }
        notify(&mut observer, &state, Phase::Cooling, report, squeezed);
    }

    let mut budget = config.max_iter;
    constant_phase(&mut state, problem, config, &mut budget, &mut observer)?;

    let mut rounds = 0;
    let mut polish_singular = false;
    let mut residual;
    loop {
        rounds += 1;
        polish_singular |= polish_in_place(&mut state, problem, config)?;
        let q_eff = config.q.min(state.free_columns());
        residual = residual_on(
            problem,
            &state.active,
            state.beta.view(),
            state.rho,
            q_eff,
            config.eta0 / state.rho,
        )?;
        if residual <= config.polish_tol || rounds >= MAX_POLISH_ROUNDS || budget == 0 {
            break;
        }
        log::debug!("polish round {rounds}: residual {residual:e}, resuming iterations");
        constant_phase(&mut state, problem, config, &mut budget, &mut observer)?;
    }
    if residual > config.polish_tol {
        log::warn!("fixed-point residual {residual:e} above tolerance {:e}", config.polish_tol);
    }

    let ncols = problem.design().ncols();
    let fixed_full = state.design_coefficients(ncols);
    let support: Vec<usize> = state.support().into_iter().map(|j| j - problem.offset()).collect();
    let (reported, refit_singular) = if config.refit {
        let block: Vec<usize> = state
            .active
            .iter()
            .copied()
            .filter(|&j| problem.is_protected(j) || support.contains(&(j - problem.offset())))
            .collect();
        let start = fixed_full.select(Axis(0), &block);
        let out = refit(problem, &block, Some(start.view()), config.refit_ridge, config.polish_max_iter)?;
        let mut full = Array2::zeros((ncols, problem.m()));
        for (r, &j) in block.iter().enumerate() {
            full.row_mut(j).assign(&out.coefficients.row(r));
        }
        (full, out.singular)
    } else {
        (fixed_full.clone(), false)
    };

    let split = |full: &Array2<T>| -> (Array2<T>, Option<Array1<T>>) {
        let off = problem.offset();
        let coef = full.slice(ndarray::s![off.., ..]).to_owned();
        let icpt = problem.has_intercept().then(|| full.row(0).to_owned());
        (coef, icpt)
    };
    let (coefficients, intercept) = split(&reported);
    let (fixed_point, fixed_point_intercept) = split(&fixed_full);
    let iterations = state.t;
    Ok(FitResult {
        coefficients,
        intercept,
        fixed_point,
        fixed_point_intercept,
        support,
        active: state.active.clone(),
        objective_trace: state.objective_trace,
        rho_trace: state.rho_trace,
        q_trace: state.q_trace,
        eta_bar_trace: state.eta_bar_trace,
        fixed_point_residual: residual,
        rho: state.rho,
        eta_bar: config.eta0 / state.rho,
        q: config.q,
        line_search_warnings: state.line_search_warnings,
        polish_rounds: rounds,
        polish_singular,
        refit_singular,
        iterations,
        wall_time: clock.elapsed().as_secs_f64(),
    })
}

fn notify<T: Scalar>(
    observer: &mut impl FnMut(&IterationEvent),
    state: &SolverState<T>,
    phase: Phase,
    report: StepReport,
    squeezed: bool,
) {
    let support = state.support();
    observer(&IterationEvent {
        phase,
        report,
        t: state.t,
        active: &state.active,
        support: &support,
        squeezed,
    });
}

/// Constant-`q` steps until the support repeats `stable_iters` times in a
/// row or `budget` runs out.
fn constant_phase<T: Scalar>(
    state: &mut SolverState<T>,
    problem: &Problem<T>,
    config: &SolverConfig,
    budget: &mut usize,
    observer: &mut impl FnMut(&IterationEvent),
) -> Result<()> {
    let mut previous = state.support();
    let mut unchanged = 0;
    while *budget > 0 && unchanged < config.stable_iters {
        *budget -= 1;
        let report = step(state, problem, config)?;
        let support = state.support();
        if support == previous {
            unchanged += 1;
        } else {
            unchanged = 0;
            previous = support;
        }
        notify(observer, state, Phase::Constant, report, false);
    }
    Ok(())
}

/// Replaces the nonzero block of the iterate by the restricted minimizer.
/// Returns whether the restricted system was singular.
fn polish_in_place<T: Scalar>(
    state: &mut SolverState<T>,
    problem: &Problem<T>,
    config: &SolverConfig,
) -> Result<bool> {
    let rows: Vec<usize> = state
        .beta
        .axis_iter(Axis(0))
        .enumerate()
        .filter(|(r, row)| {
            problem.is_protected(state.active[*r]) || row.iter().any(|v| *v != T::zero())
        })
        .map(|(r, _)| r)
        .collect();
    let block: Vec<usize> = rows.iter().map(|&r| state.active[r]).collect();
    let start = state.beta.select(Axis(0), &rows);
    let out = polish(
        problem,
        &block,
        Some(start.view()),
        config.eta0,
        config.polish_tol,
        config.polish_max_iter,
    )?;
    let mut beta = Array2::zeros(state.beta.raw_dim());
    for (i, &r) in rows.iter().enumerate() {
        beta.row_mut(r).assign(&out.coefficients.row(i));
    }
    state.set_iterate(beta, out.fitted);
    Ok(out.singular)
}

/// Iterative hard thresholding with the same line search and stopping
/// rule as [`fit`].
pub fn iht_baseline<T: Scalar>(problem: &Problem<T>, q: usize, max_iter: usize) -> Result<FitResult<T>> {
    let config = SolverConfig { max_iter, ..SolverConfig::iht(q) };
    fit(problem, &config)
}
