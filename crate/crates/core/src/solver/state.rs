use ndarray::{Array2, ArrayView2, Axis};

use super::problem::Problem;
use super::SolverConfig;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::schedules::{eta_bar, search, Linearization, LineSearchParams, ShrinkagePlan};
use crate::thresholding::{ThresholdPolicy, TieMode};

/// Iterate and bookkeeping for one run.
///
/// `beta` has one row per entry of `active`, which lists design columns in
/// ascending order. Traces grow by one entry per step.
#[derive(Clone, Debug)]
pub struct SolverState<T: Scalar> {
    pub beta: Array2<T>,
    pub fitted: Array2<T>,
    pub active: Vec<usize>,
    pub t: usize,
    pub rho: f64,
    pub q: usize,
    pub eta_bar: f64,
    pub objective_trace: Vec<f64>,
    pub rho_trace: Vec<f64>,
    pub q_trace: Vec<usize>,
    pub eta_bar_trace: Vec<f64>,
    pub line_search_warnings: usize,
    policy: ThresholdPolicy,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub q: usize,
    pub rho: f64,
    pub eta_bar: f64,
    pub objective: f64,
    pub accepted: bool,
}

impl<T: Scalar> SolverState<T> {
    /// State over every design column. `start` is indexed by design column
    /// and defaults to zero.
    pub fn new(
        problem: &Problem<T>,
        start: Option<ArrayView2<T>>,
        rho0: f64,
        tie_mode: TieMode,
    ) -> Result<Self> {
        let ncols = problem.design().ncols();
        let active: Vec<usize> = (0..ncols).collect();
        let beta = match start {
            Some(b) => {
                if b.dim() != (ncols, problem.m()) {
                    return Err(Error::DimensionMismatch(format!(
                        "warm start {:?}, expected {:?}",
                        b.dim(),
                        (ncols, problem.m())
                    )));
                }
                b.to_owned()
            }
            None => Array2::zeros((ncols, problem.m())),
        };
        let fitted = problem.design().mul(&active, beta.view())?;
        let policy = ThresholdPolicy::new(tie_mode)
            .with_protected((0..ncols).filter(|&j| problem.is_protected(j)));
        Ok(SolverState {
            beta,
            fitted,
            active,
            t: 0,
            rho: rho0,
            q: ncols,
            eta_bar: 0.0,
            objective_trace: Vec::new(),
            rho_trace: Vec::new(),
            q_trace: Vec::new(),
            eta_bar_trace: Vec::new(),
            line_search_warnings: 0,
            policy,
        })
    }

    pub fn policy(&self) -> &ThresholdPolicy {
        &self.policy
    }

    /// Number of active columns subject to thresholding.
    pub fn free_columns(&self) -> usize {
        self.active.len() - self.policy.protected().len()
    }

    /// Design columns with a nonzero coefficient row, protected ones excluded.
    pub fn support(&self) -> Vec<usize> {
        let prot = self.policy.protected();
        self.beta
            .axis_iter(Axis(0))
            .enumerate()
            .filter(|(r, row)| !prot.contains(r) && row.iter().any(|v| *v != T::zero()))
            .map(|(r, _)| self.active[r])
            .collect()
    }

    pub fn objective(&self, problem: &Problem<T>, eta0: f64) -> f64 {
        let loss = problem.loss().value_unchecked(self.fitted.view(), problem.response());
        let prot = self.policy.protected();
        let pen: f64 = self
            .beta
            .axis_iter(Axis(0))
            .enumerate()
            .filter(|(r, _)| !prot.contains(r))
            .map(|(_, row)| row.iter().map(|v| v.modulus_squared()).sum::<f64>())
            .sum();
        loss + 0.5 * eta0 * pen
    }

    /// Coefficients scattered back onto all `ncols` design columns.
    pub fn design_coefficients(&self, ncols: usize) -> Array2<T> {
        let mut out = Array2::zeros((ncols, self.beta.ncols()));
        for (r, &j) in self.active.iter().enumerate() {
            out.row_mut(j).assign(&self.beta.row(r));
        }
        out
    }

    pub(crate) fn set_iterate(&mut self, beta: Array2<T>, fitted: Array2<T>) {
        self.beta = beta;
        self.fitted = fitted;
    }
}

pub(crate) fn shrinkage_plan<T: Scalar>(problem: &Problem<T>, config: &SolverConfig) -> ShrinkagePlan {
    ShrinkagePlan {
        eta0: config.eta0,
        lipschitz: problem.loss().lipschitz(),
        n: problem.n(),
        p: problem.p(),
        q: config.q,
    }
}

/// One slow-kill update: gradient over the active columns, line search for
/// `ρ_{t+1}` warm-started at `ρ_t`, then `Θ#` with `(q_{t+1}, η̄_{t+1})`.
pub fn step<T: Scalar>(
    state: &mut SolverState<T>,
    problem: &Problem<T>,
    config: &SolverConfig,
) -> Result<StepReport> {
    let q_next = config.schedule.cardinality(problem.p(), state.t).min(state.free_columns());
    let plan = shrinkage_plan(problem, config);
    let at = Linearization::from_fitted(
        problem.loss(),
        problem.design(),
        &state.active,
        problem.response(),
        state.beta.clone(),
        state.fitted.clone(),
    )?;
    let params = LineSearchParams {
        rho_start: state.rho,
        alpha: config.alpha,
        max_moves: config.max_search,
    };
    let out = search(
        problem.loss(),
        problem.design(),
        &state.active,
        &at,
        q_next,
        |rho| eta_bar(q_next, rho, &plan),
        &state.policy,
        &params,
    )?;
    if !out.accepted {
        state.line_search_warnings += 1;
        log::debug!("line search exhausted at t = {} (rho = {})", state.t, out.rho);
    }
    state.set_iterate(out.beta, out.fitted);
    state.rho = out.rho;
    state.q = q_next;
    state.eta_bar = out.eta_bar;
    state.t += 1;
    let objective = state.objective(problem, config.eta0);
    state.objective_trace.push(objective);
    state.rho_trace.push(out.rho);
    state.q_trace.push(q_next);
    state.eta_bar_trace.push(out.eta_bar);
    Ok(StepReport { q: q_next, rho: out.rho, eta_bar: out.eta_bar, objective, accepted: out.accepted })
}

/// Drops active columns whose coefficient row is zero. Protected columns
/// stay. Column order and original indexing are preserved.
pub fn squeeze<T: Scalar>(state: &mut SolverState<T>) {
    let prot = state.policy.protected().to_vec();
    let keep: Vec<usize> = state
        .beta
        .axis_iter(Axis(0))
        .enumerate()
        .filter(|(r, row)| prot.contains(r) || row.iter().any(|v| *v != T::zero()))
        .map(|(r, _)| r)
        .collect();
    if keep.len() == state.active.len() {
        return;
    }
    let beta = state.beta.select(Axis(0), &keep);
    let active: Vec<usize> = keep.iter().map(|&r| state.active[r]).collect();
    let new_prot: Vec<usize> = keep
        .iter()
        .enumerate()
        .filter(|(_, r)| prot.contains(r))
        .map(|(i, _)| i)
        .collect();
    state.policy = ThresholdPolicy::new(state.policy.tie_mode).with_protected(new_prot);
    state.beta = beta;
    state.active = active;
}
