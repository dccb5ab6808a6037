//! Dense design matrices stored column by column.
//!
//! Every product the solver needs touches a subset of columns (the active
//! set after squeezing, or the support of a thresholded iterate), so columns
//! are kept contiguous and products take an explicit column list.

use ndarray::{Array1, Array2, ArrayView2, ShapeBuilder};

use crate::error::{Error, Result};
use crate::scalar::{dot_conj, Scalar};

#[derive(Clone, Debug)]
pub struct Design<T: Scalar> {
    // n × p, Fortran layout
    data: Array2<T>,
}

impl<T: Scalar> Design<T> {
    pub fn new(x: ArrayView2<T>) -> Self {
        let mut data = Array2::zeros(x.raw_dim().f());
        data.assign(&x);
        Design { data }
    }

    /// Same design with a column of ones placed first.
    pub fn with_leading_ones(x: ArrayView2<T>) -> Self {
        let (n, p) = x.dim();
        let mut data = Array2::zeros((n, p + 1).f());
        data.column_mut(0).fill(T::one());
        data.slice_mut(ndarray::s![.., 1..]).assign(&x);
        Design { data }
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, T> {
        self.data.view()
    }

    pub fn column(&self, j: usize) -> &[T] {
        let start = j * self.nrows();
        &self.data.as_slice_memory_order().expect("fortran layout")[start..start + self.nrows()]
    }

    /// `X_cols · coef` for a `cols.len() × m` coefficient block. Zero rows are
    /// skipped, so the cost scales with the support of `coef`.
    pub fn mul(&self, cols: &[usize], coef: ArrayView2<T>) -> Result<Array2<T>> {
        if coef.nrows() != cols.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficient rows for {} columns",
                coef.nrows(),
                cols.len()
            )));
        }
        let n = self.nrows();
        let m = coef.ncols();
        let mut out = Array2::<T>::zeros((n, m).f());
        for (r, &j) in cols.iter().enumerate() {
            let xj = self.column(j);
            for k in 0..m {
                let c = coef[[r, k]];
                if c == T::zero() {
                    continue;
                }
                let mut dst = out.column_mut(k);
                let dst = dst.as_slice_mut().expect("fortran layout");
                for (d, &x) in dst.iter_mut().zip(xj) {
                    *d += x * c;
                }
            }
        }
        Ok(out)
    }

    /// `X_colsᴴ · g` for an `n × m` block `g`.
    pub fn adjoint_mul(&self, cols: &[usize], g: ArrayView2<T>) -> Result<Array2<T>> {
        if g.nrows() != self.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows in gradient, design has {}",
                g.nrows(),
                self.nrows()
            )));
        }
        let m = g.ncols();
        let gcols: Vec<Vec<T>> = (0..m).map(|k| g.column(k).to_vec()).collect();
        let mut out = Array2::<T>::zeros((cols.len(), m));
        for (r, &j) in cols.iter().enumerate() {
            let xj = self.column(j);
            for (k, gk) in gcols.iter().enumerate() {
                out[[r, k]] = dot_conj(xj, gk);
            }
        }
        Ok(out)
    }

    /// Gram block `X_colsᴴ X_cols`.
    pub fn gram(&self, cols: &[usize]) -> Array2<T> {
        let k = cols.len();
        let mut g = Array2::<T>::zeros((k, k));
        for a in 0..k {
            let xa = self.column(cols[a]);
            for b in a..k {
                let v = dot_conj(xa, self.column(cols[b]));
                g[[a, b]] = v;
                g[[b, a]] = v.conjugate();
            }
        }
        g
    }

    /// Squared spectral norm of `X_cols` by power iteration on `XᴴX`.
    pub fn spectral_norm_sq(&self, cols: &[usize], iters: usize) -> f64 {
        let k = cols.len();
        if k == 0 {
            return 0.0;
        }
        // deterministic, generically non-orthogonal start
        let mut v = Array2::<T>::from_shape_fn((k, 1), |(i, _)| {
            T::from_real(1.0 + (i % 7) as f64 * 0.1)
        });
        let mut lambda = 0.0;
        for _ in 0..iters.max(1) {
            let nv: f64 = v.iter().map(|c| c.modulus_squared()).sum::<f64>().sqrt();
            if nv == 0.0 {
                return 0.0;
            }
            v.mapv_inplace(|c| c.unscale(nv));
            let xv = self.mul(cols, v.view()).expect("shape checked");
            lambda = xv.iter().map(|c| c.modulus_squared()).sum::<f64>();
            v = self.adjoint_mul(cols, xv.view()).expect("shape checked");
        }
        lambda
    }

    /// Column-wise squared norms.
    pub fn column_norms_sq(&self) -> Array1<f64> {
        (0..self.ncols())
            .map(|j| self.column(j).iter().map(|c| c.modulus_squared()).sum())
            .collect()
    }
}
