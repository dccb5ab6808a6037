//! Restricted smooth solves on a fixed support, and the fixed-point check.

use nalgebra::DMatrix;
use ndarray::{Array2, ArrayView2, Zip};

use super::problem::Problem;
use crate::error::Result;
use crate::losses::{sigmoid, softplus, LossKind};
use crate::scalar::Scalar;
use crate::thresholding::{group_quantile_threshold, ThresholdPolicy};

/// Coefficients of a restricted solve over `block` (design columns).
#[derive(Clone, Debug)]
pub struct PolishOutcome<T: Scalar> {
    pub coefficients: Array2<T>,
    pub fitted: Array2<T>,
    /// The restricted system was singular; a minimum-norm solution was used.
    pub singular: bool,
    /// Newton iterations used (zero for quadratic losses).
    pub iterations: usize,
    /// Largest absolute entry of the restricted gradient at the solution.
    pub gradient_inf: f64,
}

/// Minimizes `l0(X_J γ; y) + (η/2)‖γ‖²` over the design columns `block`,
/// leaving protected columns unpenalized.
///
/// Quadratic losses solve the normal equations directly. The logistic loss
/// uses damped Newton steps from `start`, stopping once the gradient
/// ∞-norm is at most `tol` or after `max_iter` steps.
pub fn polish<T: Scalar>(
    problem: &Problem<T>,
    block: &[usize],
    start: Option<ArrayView2<T>>,
    eta: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PolishOutcome<T>> {
    let m = problem.m();
    if block.is_empty() {
        let coefficients = Array2::zeros((0, m));
        let fitted = problem.design().mul(block, coefficients.view())?;
        return Ok(PolishOutcome { coefficients, fitted, singular: false, iterations: 0, gradient_inf: 0.0 });
    }
    let penalty: Vec<f64> =
        block.iter().map(|&j| if problem.is_protected(j) { 0.0 } else { eta }).collect();
    let (coefficients, singular, iterations) = match problem.loss().kind {
        LossKind::Quadratic | LossKind::ComplexQuadraticMmv => {
            let (c, s) = normal_equations(problem, block, &penalty)?;
            (c, s, 0)
        }
        LossKind::Logistic => newton_logistic(problem, block, start, &penalty, tol, max_iter)?,
    };
    let fitted = problem.design().mul(block, coefficients.view())?;
    let gradient_inf = restricted_gradient(problem, block, &coefficients, &fitted, &penalty)?
        .iter()
        .fold(0.0, |a: f64, g| a.max(g.modulus()));
    Ok(PolishOutcome { coefficients, fitted, singular, iterations, gradient_inf })
}

/// Least-squares refit on `block` with a tiny ridge for stability.
pub fn refit<T: Scalar>(
    problem: &Problem<T>,
    block: &[usize],
    start: Option<ArrayView2<T>>,
    ridge: f64,
    max_iter: usize,
) -> Result<PolishOutcome<T>> {
    if block.iter().filter(|&&j| !problem.is_protected(j)).count() > problem.n() {
        log::warn!("refitting {} columns with only {} observations", block.len(), problem.n());
    }
    polish(problem, block, start, ridge, 1e-10, max_iter)
}

fn restricted_gradient<T: Scalar>(
    problem: &Problem<T>,
    block: &[usize],
    coefficients: &Array2<T>,
    fitted: &Array2<T>,
    penalty: &[f64],
) -> Result<Array2<T>> {
    let g = problem.loss().gradient_unchecked(fitted.view(), problem.response());
    let mut out = problem.design().adjoint_mul(block, g.view())?;
    for (r, mut row) in out.rows_mut().into_iter().enumerate() {
        let c = coefficients.row(r);
        Zip::from(&mut row).and(&c).for_each(|o, &b| *o += b.scale(penalty[r]));
    }
    Ok(out)
}

fn to_nalgebra<T: Scalar>(a: ArrayView2<T>) -> DMatrix<T> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_nalgebra<T: Scalar>(a: &DMatrix<T>) -> Array2<T> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

/// Solves `(X_JᴴX_J + D) γ = X_Jᴴ Y`, falling back to the pseudo-inverse
/// when the Cholesky factorization fails.
fn normal_equations<T: Scalar>(
    problem: &Problem<T>,
    block: &[usize],
    penalty: &[f64],
) -> Result<(Array2<T>, bool)> {
    let design = problem.design();
    let mut gram = design.gram(block);
    for (r, &d) in penalty.iter().enumerate() {
        gram[[r, r]] += T::from_real(d);
    }
    let rhs = to_nalgebra(design.adjoint_mul(block, problem.response())?.view());
    let g = to_nalgebra(gram.view());
    if let Some(ch) = g.clone().cholesky() {
        let sol = ch.solve(&rhs);
        if sol.iter().all(|v| v.is_finite()) {
            return Ok((from_nalgebra(&sol), false));
        }
    }
    Ok((from_nalgebra(&pinv_solve(g, &rhs)), true))
}

fn pinv_solve<T: Scalar>(g: DMatrix<T>, rhs: &DMatrix<T>) -> DMatrix<T> {
    let scale = g.iter().fold(0.0f64, |a, v| a.max(v.modulus())).max(1.0);
    let eps = scale * 1e-12 * g.nrows() as f64;
    let pinv = g
        .pseudo_inverse(eps)
        .expect("nonnegative tolerance");
    pinv * rhs
}

fn newton_logistic<T: Scalar>(
    problem: &Problem<T>,
    block: &[usize],
    start: Option<ArrayView2<T>>,
    penalty: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Array2<T>, bool, usize)> {
    let k = block.len();
    let n = problem.n();
    let x = DMatrix::from_fn(n, k, |i, j| problem.design().column(block[j])[i].real());
    let y: Vec<f64> = problem.response().column(0).iter().map(|v| v.real()).collect();
    let mut gamma = match start {
        Some(s) => nalgebra::DVector::from_fn(k, |i, _| s[[i, 0]].real()),
        None => nalgebra::DVector::zeros(k),
    };
    let objective = |eta: &nalgebra::DVector<f64>, gamma: &nalgebra::DVector<f64>| -> f64 {
        let loss: f64 = eta.iter().zip(&y).map(|(&a, &b)| softplus(a) - a * b).sum();
        let pen: f64 = gamma.iter().zip(penalty).map(|(g, d)| d * g * g).sum();
        loss + 0.5 * pen
    };
    let mut xi = &x * &gamma;
    let mut f = objective(&xi, &gamma);
    let mut singular = false;
    let mut iters = 0;
    while iters < max_iter {
        let resid = nalgebra::DVector::from_fn(n, |i, _| sigmoid(xi[i]) - y[i]);
        let mut grad = x.tr_mul(&resid);
        for r in 0..k {
            grad[r] += penalty[r] * gamma[r];
        }
        if grad.amax() <= tol {
            break;
        }
        iters += 1;
        let w = nalgebra::DVector::from_fn(n, |i, _| {
            let s = sigmoid(xi[i]);
            s * (1.0 - s)
        });
        let mut xw = x.clone();
        for (mut row, &wi) in xw.row_iter_mut().zip(w.iter()) {
            row *= wi;
        }
        let mut hess = x.tr_mul(&xw);
        for r in 0..k {
            hess[(r, r)] += penalty[r];
        }
        let dir = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&grad),
            None => {
                singular = true;
                pinv_solve(hess, &DMatrix::from_column_slice(k, 1, grad.as_slice())).column(0).into_owned()
            }
        };
        let slope = -grad.dot(&dir);
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand = &gamma - &dir * t;
            let cand_xi = &x * &cand;
            let fc = objective(&cand_xi, &cand);
            if fc.is_finite() && fc <= f + 1e-4 * t * slope {
                gamma = cand;
                xi = cand_xi;
                moved = fc < f;
                f = fc;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let coef = Array2::from_shape_fn((k, 1), |(i, _)| T::from_real(gamma[i]));
    Ok((coef, singular, iters))
}

/// `‖β − Θ#(β − ρ⁻¹Xᴴ∇l0(Xβ); q, η̄)‖_∞` over all design columns, with
/// `beta` indexed by design column.
pub fn fixed_point_residual<T: Scalar>(
    problem: &Problem<T>,
    beta: ArrayView2<T>,
    rho: f64,
    q: usize,
    eta_bar: f64,
) -> Result<f64> {
    let cols: Vec<usize> = (0..problem.design().ncols()).collect();
    residual_on(problem, &cols, beta, rho, q, eta_bar)
}

/// Fixed-point residual restricted to the design columns `cols`; `beta`
/// has one row per entry of `cols`.
pub fn residual_on<T: Scalar>(
    problem: &Problem<T>,
    cols: &[usize],
    beta: ArrayView2<T>,
    rho: f64,
    q: usize,
    eta_bar: f64,
) -> Result<f64> {
    let design = problem.design();
    let fitted = design.mul(cols, beta)?;
    let g = problem.loss().gradient(fitted.view(), problem.response())?;
    let grad = design.adjoint_mul(cols, g.view())?;
    let z = &beta - &grad.mapv(|v| v.unscale(rho));
    let prot: Vec<usize> =
        cols.iter().enumerate().filter(|(_, &j)| problem.is_protected(j)).map(|(r, _)| r).collect();
    let free = cols.len() - prot.len();
    let policy = ThresholdPolicy::default().with_protected(prot);
    let next = group_quantile_threshold(z.view(), q.min(free), eta_bar, &policy)?;
    Ok(Zip::from(&next).and(&beta).fold(0.0, |acc: f64, &a, &b| acc.max((a - b).modulus())))
}
