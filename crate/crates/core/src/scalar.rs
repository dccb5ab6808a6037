use nalgebra::ComplexField;
use ndarray::LinalgScalar;
use num_complex::Complex64;

/// Field the solver runs over: `f64` for real problems and `Complex64` for
/// complex multi-response problems.
///
/// Inner products are Hermitian, `⟨a, b⟩ = Σ conj(a_i) b_i`, so the real
/// case is the usual dot product.
pub trait Scalar: ComplexField<RealField = f64> + LinalgScalar {
    const IS_COMPLEX: bool;
}

impl Scalar for f64 {
    const IS_COMPLEX: bool = false;
}

impl Scalar for Complex64 {
    const IS_COMPLEX: bool = true;
}

/// `Σ conj(a_i) b_i`
#[inline]
pub fn dot_conj<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&ai, &bi) in a.iter().zip(b) {
        acc += ai.conjugate() * bi;
    }
    acc
}

/// Real part of `⟨a, b⟩`; for complex data this is the symmetrized
/// Hermitian form `(⟨a, b⟩ + ⟨b, a⟩) / 2`.
#[inline]
pub fn re_inner<'a, T: Scalar>(
    a: impl IntoIterator<Item = &'a T>,
    b: impl IntoIterator<Item = &'a T>,
) -> f64 {
    a.into_iter()
        .zip(b)
        .map(|(&ai, &bi)| (ai.conjugate() * bi).real())
        .sum()
}

#[inline]
pub fn norm_sq<'a, T: Scalar>(a: impl IntoIterator<Item = &'a T>) -> f64 {
    a.into_iter().map(|v| v.modulus_squared()).sum()
}
