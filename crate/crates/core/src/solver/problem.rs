use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use crate::design::Design;
use crate::error::{Error, Result};
use crate::losses::{LossKind, LossSpec};
use crate::scalar::Scalar;

/// An estimation instance: design, response, loss and intercept choice.
///
/// With an intercept, a ones column sits at design index 0 and is exempt
/// from thresholding and shrinkage. Predictor `j` then lives at design
/// column `j + 1`.
#[derive(Clone, Debug)]
pub struct Problem<T: Scalar> {
    design: Design<T>,
    response: Array2<T>,
    loss: LossSpec,
    intercept: bool,
}

impl<T: Scalar> Problem<T> {
    pub fn new(x: ArrayView2<T>, y: Array2<T>, kind: LossKind, add_intercept: bool) -> Result<Self> {
        let (n, p) = x.dim();
        if n == 0 || p < 2 {
            return Err(Error::DimensionMismatch(format!(
                "need n >= 1 and p >= 2, got n = {n}, p = {p}"
            )));
        }
        if y.nrows() != n {
            return Err(Error::DimensionMismatch(format!(
                "design has {n} rows, response has {}",
                y.nrows()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("design matrix"));
        }
        let loss = LossSpec::new(kind);
        loss.check_response(y.view())?;
        let design = if add_intercept {
            Design::with_leading_ones(x)
        } else {
            Design::new(x)
        };
        Ok(Problem { design, response: y, loss, intercept: add_intercept })
    }

    pub fn design(&self) -> &Design<T> {
        &self.design
    }

    pub fn response(&self) -> ArrayView2<'_, T> {
        self.response.view()
    }

    pub fn loss(&self) -> &LossSpec {
        &self.loss
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    /// Number of predictors, not counting the intercept column.
    pub fn p(&self) -> usize {
        self.design.ncols() - self.offset()
    }

    pub fn m(&self) -> usize {
        self.response.ncols()
    }

    /// Design index of predictor 0.
    pub fn offset(&self) -> usize {
        usize::from(self.intercept)
    }

    pub fn is_protected(&self, design_col: usize) -> bool {
        self.intercept && design_col == 0
    }

    /// `Xβ + 1·b` for predictor coefficients `β` (`p × m`).
    pub fn predict(
        &self,
        coefficients: ArrayView2<T>,
        intercept: Option<ArrayView1<T>>,
    ) -> Result<Array2<T>> {
        if coefficients.dim() != (self.p(), self.m()) {
            return Err(Error::DimensionMismatch(format!(
                "coefficients {:?}, expected {:?}",
                coefficients.dim(),
                (self.p(), self.m())
            )));
        }
        let cols: Vec<usize> = (self.offset()..self.design.ncols()).collect();
        let mut fitted = self.design.mul(&cols, coefficients)?;
        if let Some(b) = intercept {
            if b.len() != self.m() {
                return Err(Error::DimensionMismatch("intercept length".into()));
            }
            for (mut col, &bk) in fitted.columns_mut().into_iter().zip(b.iter()) {
                col.mapv_inplace(|v| v + bk);
            }
        }
        Ok(fitted)
    }

    /// `l0(ξ; y) + (η0/2)‖β‖²` where `β` excludes the intercept.
    pub fn objective(&self, fitted: ArrayView2<T>, coefficients: ArrayView2<T>, eta0: f64) -> Result<f64> {
        let l = self.loss.value(fitted, self.response.view())?;
        let pen: f64 = coefficients.iter().map(|c| c.modulus_squared()).sum();
        Ok(l + 0.5 * eta0 * pen)
    }
}

impl Problem<f64> {
    /// Least squares without intercept.
    pub fn regression(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        let n = y.len();
        Problem::new(x.view(), y.into_shape_with_order((n, 1)).expect("contiguous"), LossKind::Quadratic, false)
    }

    /// Logistic deviance with 0/1 labels.
    pub fn logistic(x: Array2<f64>, y: Array1<f64>, intercept: bool) -> Result<Self> {
        let n = y.len();
        Problem::new(x.view(), y.into_shape_with_order((n, 1)).expect("contiguous"), LossKind::Logistic, intercept)
    }
}

impl Problem<Complex64> {
    /// Complex multi-response least squares with shared row support.
    pub fn mmv(x: Array2<Complex64>, y: Array2<Complex64>) -> Result<Self> {
        Problem::new(x.view(), y, LossKind::ComplexQuadraticMmv, false)
    }
}
