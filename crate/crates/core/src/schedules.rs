//! The three slow-kill sequences: cooling cardinalities `q_t`, scaled
//! shrinkage `η̄_t` and line-searched inverse learning rates `ρ_t`.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::scalar::Scalar;
use crate::thresholding::{group_quantile_threshold, ThresholdPolicy};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScheduleKind {
    Inverse,
    Sigmoidal { a: f64, b: f64, c: f64 },
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    /// Number of cooling steps `T`.
    pub steps: usize,
    pub target_q: usize,
}

impl ScheduleSpec {
    pub fn inverse(steps: usize, target_q: usize) -> Self {
        ScheduleSpec { kind: ScheduleKind::Inverse, steps, target_q }
    }

    pub fn sigmoidal(steps: usize, target_q: usize, a: f64, b: f64, c: f64) -> Self {
        ScheduleSpec { kind: ScheduleKind::Sigmoidal { a, b, c }, steps, target_q }
    }

    pub fn constant(steps: usize, target_q: usize) -> Self {
        ScheduleSpec { kind: ScheduleKind::Constant, steps, target_q }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter("schedule needs T >= 1".into()));
        }
        if self.target_q == 0 || self.target_q >= p {
            return Err(Error::InvalidParameter(format!(
                "target q = {} must lie in [1, p) with p = {p}",
                self.target_q
            )));
        }
        if let ScheduleKind::Sigmoidal { a, b, c } = self.kind {
            if !(a > 0.0 && b > 0.0 && c > 0.0) {
                return Err(Error::InvalidParameter(
                    "sigmoidal shape parameters must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    /// Whether `q_t` actually decreases. An inverse schedule with
    /// `p <= 2q` degrades to the constant schedule.
    pub fn is_cooling(&self, p: usize) -> bool {
        match self.kind {
            ScheduleKind::Inverse => p > 2 * self.target_q,
            ScheduleKind::Sigmoidal { .. } => true,
            ScheduleKind::Constant => false,
        }
    }

    /// `q_{t+1}` for step index `t`; equals the target for every `t >= T`.
    pub fn cardinality(&self, p: usize, t: usize) -> usize {
        let q = self.target_q;
        if t >= self.steps || !self.is_cooling(p) {
            return q;
        }
        match self.kind {
            ScheduleKind::Inverse => inverse_cooling(p, q, self.steps, t).unwrap_or(q),
            ScheduleKind::Sigmoidal { a, b, c } => {
                sigmoidal_cooling(p, q, self.steps, t, a, b, c).unwrap_or(q)
            }
            ScheduleKind::Constant => q,
        }
    }
}

/// `⌊q + (T − t) / (tT/(p − q) + 2T/(p − 2q))⌋`, clamped to `[q, p]`.
/// Starts at `p/2` for `t = 0` and reaches `q` at `t = T`.
pub fn inverse_cooling(p: usize, q: usize, steps: usize, t: usize) -> Result<usize> {
    if p <= 2 * q {
        return Err(Error::InvalidParameter(format!(
            "inverse cooling needs p > 2q (p = {p}, q = {q})"
        )));
    }
    if steps == 0 {
        return Err(Error::InvalidParameter("T must be positive".into()));
    }
    if t >= steps {
        return Ok(q);
    }
    // the same fraction over a common denominator, in exact integers:
    // (T − t)(p − q)(p − 2q) / (T·(t(p − 2q) + 2(p − q)))
    let (p, q, steps, t) = (p as u128, q as u128, steps as u128, t as u128);
    let num = (steps - t) * (p - q) * (p - 2 * q);
    let den = steps * (t * (p - 2 * q) + 2 * (p - q));
    Ok((q + num / den).min(p) as usize)
}

/// `⌊q + (p − q)·(1 + a·exp(bt/T))^(−c)⌋`, clamped to `[q, p]`, with every
/// `t >= T` mapped to exactly `q`.
pub fn sigmoidal_cooling(
    p: usize,
    q: usize,
    steps: usize,
    t: usize,
    a: f64,
    b: f64,
    c: f64,
) -> Result<usize> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) || steps == 0 {
        return Err(Error::InvalidParameter(
            "sigmoidal cooling needs a, b, c > 0 and T >= 1".into(),
        ));
    }
    if q > p {
        return Err(Error::InvalidParameter(format!("q = {q} exceeds p = {p}")));
    }
    if t >= steps {
        return Ok(q);
    }
    let ratio = t as f64 / steps as f64;
    let v = q as f64 + (p - q) as f64 * (1.0 + a * (b * ratio).exp()).powf(-c);
    Ok(clamp_q(v.floor(), q, p))
}

fn clamp_q(v: f64, q: usize, p: usize) -> usize {
    if !v.is_finite() || v < q as f64 {
        q
    } else if v > p as f64 {
        p
    } else {
        v as usize
    }
}

/// Surrogate for the true sparsity, `min(q, n·L²/log(e·p))`.
pub fn sbar(q: usize, n: usize, p: usize, lipschitz: f64) -> f64 {
    let alt = n as f64 * lipschitz * lipschitz / (1.0 + (p as f64).ln());
    (q as f64).min(alt)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShrinkagePlan {
    pub eta0: f64,
    pub lipschitz: f64,
    pub n: usize,
    pub p: usize,
    pub q: usize,
}

impl ShrinkagePlan {
    fn large_q_branch(&self, q_plus: usize) -> f64 {
        let s = sbar(self.q, self.n, self.p, self.lipschitz);
        1.0 / (2.0 * (q_plus as f64 / s).sqrt() - 1.0)
    }
}

/// Scaled shrinkage for the next step:
///
/// - `1/(2√(q₊/s̄) − 1)` when `q₊ > 2q` and `q ≥ n/2`,
/// - `η0/ρ₊` when `q₊ ≤ 2q`,
/// - the smaller of the two otherwise.
pub fn eta_bar(q_plus: usize, rho_plus: f64, plan: &ShrinkagePlan) -> f64 {
    let ridge = plan.eta0 / rho_plus;
    if q_plus <= 2 * plan.q {
        ridge
    } else if 2 * plan.q >= plan.n {
        plan.large_q_branch(q_plus)
    } else {
        ridge.min(plan.large_q_branch(q_plus))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearchParams {
    pub rho_start: f64,
    /// Geometric factor in `(0, 1)`.
    pub alpha: f64,
    /// Maximum number of moves away from `rho_start`.
    pub max_moves: usize,
}

impl LineSearchParams {
    pub fn new(rho_start: f64) -> Self {
        LineSearchParams { rho_start, alpha: 0.5, max_moves: 5 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {} not in (0, 1)", self.alpha)));
        }
        if self.max_moves == 0 {
            return Err(Error::InvalidParameter("M must be at least 1".into()));
        }
        if !(self.rho_start > 0.0 && self.rho_start.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rho_start = {} must be positive",
                self.rho_start
            )));
        }
        Ok(())
    }
}

/// First-order information at the current iterate over the active columns.
#[derive(Clone, Debug)]
pub struct Linearization<T: Scalar> {
    pub beta: Array2<T>,
    pub fitted: Array2<T>,
    pub loss_value: f64,
    /// `Xᴴ∇l0(Xβ; y)` restricted to the active columns.
    pub coef_gradient: Array2<T>,
}

impl<T: Scalar> Linearization<T> {
    pub fn at(
        loss: &LossSpec,
        design: &Design<T>,
        cols: &[usize],
        y: ArrayView2<T>,
        beta: Array2<T>,
    ) -> Result<Self> {
        let fitted = design.mul(cols, beta.view())?;
        loss.check_response(y)?;
        if fitted.dim() != y.dim() {
            return Err(Error::DimensionMismatch(format!(
                "fitted {:?} vs response {:?}",
                fitted.dim(),
                y.dim()
            )));
        }
        Self::from_fitted(loss, design, cols, y, beta, fitted)
    }

    pub(crate) fn from_fitted(
        loss: &LossSpec,
        design: &Design<T>,
        cols: &[usize],
        y: ArrayView2<T>,
        beta: Array2<T>,
        fitted: Array2<T>,
    ) -> Result<Self> {
        let loss_value = loss.value_unchecked(fitted.view(), y);
        let grad = loss.gradient_unchecked(fitted.view(), y);
        if !loss_value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("loss gradient"));
        }
        let coef_gradient = design.adjoint_mul(cols, grad.view())?;
        if coef_gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("coefficient gradient"));
        }
        Ok(Linearization { beta, fitted, loss_value, coef_gradient })
    }
}

#[derive(Clone, Debug)]
pub struct LineSearchOutcome<T: Scalar> {
    pub rho: f64,
    pub eta_bar: f64,
    pub beta: Array2<T>,
    pub fitted: Array2<T>,
    pub gap: f64,
    /// False when no tried `ρ` satisfied the criterion; `rho` is then the
    /// largest one tried.
    pub accepted: bool,
    pub evaluations: usize,
}

/// Slack on the majorization criterion for floating-point rounding.
pub const GAP_TOLERANCE: f64 = 1e-12;

/// Warm-started search over the grid `{ρ_start·α^k}`.
///
/// Starting from `ρ_start`, `ρ` shrinks by `α` while the step
/// `Θ#(β − ∇/ρ; q₊, η̄(ρ))` keeps the majorization gap nonnegative, or grows
/// by `1/α` until it does, using at most `max_moves` moves. `shrinkage` maps
/// a trial `ρ` to its `η̄`.
#[allow(clippy::too_many_arguments)]
pub fn search<T: Scalar>(
    loss: &LossSpec,
    design: &Design<T>,
    cols: &[usize],
    at: &Linearization<T>,
    q_next: usize,
    shrinkage: impl Fn(f64) -> f64,
    policy: &ThresholdPolicy,
    params: &LineSearchParams,
) -> Result<LineSearchOutcome<T>> {
    params.validate()?;
    let mut evaluations = 0;
    let mut eval = |rho: f64| -> Result<(LineSearchOutcome<T>, bool)> {
        evaluations += 1;
        let eta = shrinkage(rho);
        let z = &at.beta - &at.coef_gradient.mapv(|g| g.unscale(rho));
        let beta = group_quantile_threshold(z.view(), q_next, eta, policy)?;
        let fitted = design.mul(cols, beta.view())?;
        let d2 = Zip::from(&beta)
            .and(&at.beta)
            .fold(0.0, |acc, &a, &b| acc + (a - b).modulus_squared());
        let gap = 0.5 * rho * d2 - bregman_cached(loss, &fitted, at);
        let ok = gap >= -GAP_TOLERANCE;
        Ok((
            LineSearchOutcome { rho, eta_bar: eta, beta, fitted, gap, accepted: ok, evaluations: 0 },
            ok,
        ))
    };

    let (first, ok) = eval(params.rho_start)?;
    let mut best = first;
    if ok {
        for _ in 0..params.max_moves {
            let (cand, ok) = eval(best.rho * params.alpha)?;
            if !ok {
                break;
            }
            best = cand;
        }
    } else {
        for _ in 0..params.max_moves {
            let (cand, ok) = eval(best.rho / params.alpha)?;
            best = cand;
            if ok {
                break;
            }
        }
    }
    best.evaluations = evaluations;
    Ok(best)
}

fn bregman_cached<T: Scalar>(loss: &LossSpec, fitted: &Array2<T>, at: &Linearization<T>) -> f64 {
    loss.bregman_unchecked(fitted.view(), at.fitted.view())
}

/// Line search from `beta_prev` with every design column active.
#[allow(clippy::too_many_arguments)]
pub fn line_search<T: Scalar>(
    loss: &LossSpec,
    design: &Design<T>,
    y: ArrayView2<T>,
    beta_prev: ArrayView2<T>,
    q_next: usize,
    shrinkage: impl Fn(f64) -> f64,
    policy: &ThresholdPolicy,
    params: &LineSearchParams,
) -> Result<LineSearchOutcome<T>> {
    let cols: Vec<usize> = (0..design.ncols()).collect();
    let at = Linearization::at(loss, design, &cols, y, beta_prev.to_owned())?;
    search(loss, design, &cols, &at, q_next, shrinkage, policy, params)
}
