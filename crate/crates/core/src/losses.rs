//! Losses `l0(ξ; y)` as functions of fitted values `ξ = Xβ`.
//!
//! Fitted values and responses are `n × m` blocks. Quadratic and logistic
//! losses take real data with `m = 1`; the multi-response quadratic loss
//! takes complex data with any `m`.

use ndarray::{Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use crate::design::Design;
use crate::error::{Error, Result};
use crate::scalar::{norm_sq, re_inner, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossKind {
    Quadratic,
    Logistic,
    ComplexQuadraticMmv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LossSpec {
    pub kind: LossKind,
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl LossSpec {
    pub fn new(kind: LossKind) -> Self {
        LossSpec { kind }
    }

    /// Lipschitz constant of `∇l0` with respect to the fitted values.
    pub fn lipschitz(&self) -> f64 {
        match self.kind {
            LossKind::Quadratic | LossKind::ComplexQuadraticMmv => 1.0,
            LossKind::Logistic => 0.25,
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.kind, LossKind::Quadratic | LossKind::ComplexQuadraticMmv)
    }

    /// Checks that `y` is a valid response for this loss.
    pub fn check_response<T: Scalar>(&self, y: ArrayView2<T>) -> Result<()> {
        match self.kind {
            LossKind::Quadratic | LossKind::Logistic => {
                if T::IS_COMPLEX {
                    return Err(Error::InvalidResponse(format!(
                        "{:?} loss needs real data",
                        self.kind
                    )));
                }
                if y.ncols() != 1 {
                    return Err(Error::DimensionMismatch(format!(
                        "{:?} loss takes one response column, got {}",
                        self.kind,
                        y.ncols()
                    )));
                }
            }
            LossKind::ComplexQuadraticMmv => {
                if !T::IS_COMPLEX {
                    return Err(Error::InvalidResponse(
                        "multi-response loss needs complex data".into(),
                    ));
                }
            }
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidResponse("non-finite response".into()));
        }
        if self.kind == LossKind::Logistic
            && y.iter().any(|&v| v != T::zero() && v != T::one())
        {
            return Err(Error::InvalidResponse(
                "logistic responses must be 0 or 1".into(),
            ));
        }
        Ok(())
    }

    fn check_pair<T: Scalar>(&self, xb: ArrayView2<T>, y: ArrayView2<T>) -> Result<()> {
        if xb.dim() != y.dim() {
            return Err(Error::DimensionMismatch(format!(
                "fitted values {:?} vs response {:?}",
                xb.dim(),
                y.dim()
            )));
        }
        self.check_response(y)
    }

    pub fn value<T: Scalar>(&self, xb: ArrayView2<T>, y: ArrayView2<T>) -> Result<f64> {
        self.check_pair(xb, y)?;
        Ok(self.value_unchecked(xb, y))
    }

    pub(crate) fn value_unchecked<T: Scalar>(&self, xb: ArrayView2<T>, y: ArrayView2<T>) -> f64 {
        match self.kind {
            LossKind::Quadratic | LossKind::ComplexQuadraticMmv => {
                0.5 * Zip::from(&xb)
                    .and(&y)
                    .fold(0.0, |acc, &a, &b| acc + (b - a).modulus_squared())
            }
            LossKind::Logistic => Zip::from(&xb).and(&y).fold(0.0, |acc, &a, &b| {
                let (a, b) = (a.real(), b.real());
                acc - b * a + softplus(a)
            }),
        }
    }

    /// `∇l0(ξ; y)`, an `n × m` block.
    pub fn gradient<T: Scalar>(&self, xb: ArrayView2<T>, y: ArrayView2<T>) -> Result<Array2<T>> {
        self.check_pair(xb, y)?;
        Ok(self.gradient_unchecked(xb, y))
    }

    pub(crate) fn gradient_unchecked<T: Scalar>(
        &self,
        xb: ArrayView2<T>,
        y: ArrayView2<T>,
    ) -> Array2<T> {
        match self.kind {
            LossKind::Quadratic | LossKind::ComplexQuadraticMmv => &xb - &y,
            LossKind::Logistic => {
                Zip::from(&xb)
                    .and(&y)
                    .map_collect(|&a, &b| T::from_real(sigmoid(a.real()) - b.real()))
            }
        }
    }

    /// Generalized Bregman function
    /// `Δ(ξ1, ξ2) = l0(ξ1) − l0(ξ2) − Re⟨∇l0(ξ2), ξ1 − ξ2⟩`.
    ///
    /// The real part of the Hermitian inner product is the symmetrized form
    /// used for complex data, so the value is always real. Quadratic losses
    /// use the closed form `½‖ξ1 − ξ2‖²`.
    pub fn bregman<T: Scalar>(
        &self,
        xb1: ArrayView2<T>,
        xb2: ArrayView2<T>,
        y: ArrayView2<T>,
    ) -> Result<f64> {
        self.check_pair(xb1, y)?;
        self.check_pair(xb2, y)?;
        Ok(self.bregman_unchecked(xb1, xb2))
    }

    pub(crate) fn bregman_unchecked<T: Scalar>(&self, xb1: ArrayView2<T>, xb2: ArrayView2<T>) -> f64 {
        match self.kind {
            LossKind::Quadratic | LossKind::ComplexQuadraticMmv => {
                0.5 * Zip::from(&xb1)
                    .and(&xb2)
                    .fold(0.0, |acc, &a, &b| acc + (a - b).modulus_squared())
            }
            // the linear terms in y cancel
            LossKind::Logistic => Zip::from(&xb1).and(&xb2).fold(0.0, |acc, &a, &b| {
                let (a, b) = (a.real(), b.real());
                acc + softplus(a) - softplus(b) - sigmoid(b) * (a - b)
            }),
        }
    }

    /// `(ρ/2)‖β1 − β2‖² − Δ(Xβ1, Xβ2)`; nonnegative exactly when the
    /// quadratic surrogate with inverse step `ρ` majorizes the loss along
    /// the move from `β2` to `β1`.
    pub fn majorization_gap<T: Scalar>(
        &self,
        rho: f64,
        beta1: ArrayView2<T>,
        beta2: ArrayView2<T>,
        design: &Design<T>,
        y: ArrayView2<T>,
    ) -> Result<f64> {
        if rho.is_nan() || rho <= 0.0 {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
        }
        if beta1.dim() != beta2.dim() || beta1.nrows() != design.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "coefficients {:?} and {:?} for {} columns",
                beta1.dim(),
                beta2.dim(),
                design.ncols()
            )));
        }
        let cols: Vec<usize> = (0..design.ncols()).collect();
        let xb1 = design.mul(&cols, beta1)?;
        let xb2 = design.mul(&cols, beta2)?;
        let d2 = Zip::from(&beta1)
            .and(&beta2)
            .fold(0.0, |acc, &a, &b| acc + (a - b).modulus_squared());
        Ok(0.5 * rho * d2 - self.bregman(xb1.view(), xb2.view(), y)?)
    }
}

/// `l0(ξ1) − l0(ξ2) − Re⟨g2, ξ1 − ξ2⟩` with cached `l0(ξ2)` and `g2`,
/// written out from the definition. Used by tests and as a cross-check.
pub fn bregman_by_definition<T: Scalar>(
    loss: &LossSpec,
    xb1: ArrayView2<T>,
    xb2: ArrayView2<T>,
    y: ArrayView2<T>,
) -> Result<f64> {
    let l1 = loss.value(xb1, y)?;
    let l2 = loss.value(xb2, y)?;
    let g2 = loss.gradient(xb2, y)?;
    let diff = &xb1 - &xb2;
    Ok(l1 - l2 - re_inner(g2.iter(), diff.iter()))
}

/// `½‖a‖_F²`
pub fn half_norm_sq<T: Scalar>(a: ArrayView2<T>) -> f64 {
    0.5 * norm_sq(a.iter())
}
