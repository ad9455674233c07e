//! Dense and iterative linear algebra used by the Hodge machinery.
//!
//! Everything here is written against [`Real`] so that the same kernels run in
//! `f32` and `f64`. `nalgebra` matrices are used as storage only.

mod eigen;
mod lanczos;
mod lsqr;
mod qr;
mod svd;

pub use eigen::{symmetric_eigen, tridiagonal_eigen, SymmetricEigen};
pub use lanczos::{conjugate_gradient, lanczos_largest, LanczosOptions, LanczosResult};
pub use lsqr::{lsqr, LsqrOptions, LsqrOutcome, LsqrStop};
pub use qr::HouseholderQr;
pub use svd::{numerical_rank, singular_values};

use crate::scalar::Real;

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm<T: Real>(a: &[T]) -> T {
    // scaled to avoid overflow in f32
    let scale = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if scale == T::zero() {
        return T::zero();
    }
    scale * a.iter().map(|&x| (x / scale) * (x / scale)).sum::<T>().sqrt()
}

/// `y += alpha * x`
pub fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale_in_place<T: Real>(alpha: T, x: &mut [T]) {
    for xi in x {
        *xi *= alpha;
    }
}

pub fn sub<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

pub fn max_abs_diff<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}
