//! Singular values via Householder bidiagonalization and the Golub–Kahan
//! tridiagonal embedding, and the numerical rank built on top of them.

use nalgebra::DMatrix;

use super::eigen::tridiagonal_eigen;
use crate::error::Result;
use crate::scalar::Real;

/// Singular values of `a` in decreasing order (`min(m, n)` of them).
pub fn singular_values<T: Real>(a: &DMatrix<T>) -> Result<Vec<T>> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(Vec::new());
    }
    // work on the tall orientation
    let mut w = if m >= n { a.clone() } else { a.transpose() };
    let (d, e) = bidiagonalize(&mut w);
    let k = d.len();

    // [[0, B], [Bᵀ, 0]] is permutation-similar to the symmetric tridiagonal
    // with zero diagonal and off-diagonal (d0, e0, d1, e1, ..., d_{k-1});
    // its eigenvalues are ±σ.
    let mut off = Vec::with_capacity(2 * k - 1);
    for i in 0..k {
        off.push(d[i]);
        if i + 1 < k {
            off.push(e[i]);
        }
    }
    let eig = tridiagonal_eigen(&vec![T::zero(); 2 * k], &off, false)?;
    let mut mags: Vec<T> = eig.values.iter().map(|v| v.abs()).collect();
    mags.sort_by(|x, y| y.partial_cmp(x).unwrap());
    Ok(mags.into_iter().step_by(2).collect())
}

/// Number of singular values above `tol`. With `tol = None` the threshold is
/// `max(m, n) · ε · σ_max`.
pub fn numerical_rank<T: Real>(a: &DMatrix<T>, tol: Option<T>) -> Result<usize> {
    let sv = singular_values(a)?;
    let Some(&smax) = sv.first() else {
        return Ok(0);
    };
    let tol = tol.unwrap_or_else(|| {
        T::from_count(a.nrows().max(a.ncols())) * T::epsilon() * smax
    });
    Ok(sv.iter().filter(|&&s| s > tol).count())
}

/// Reduce the tall matrix `w` (m ≥ n) to upper bidiagonal form in place and
/// return its diagonal and super-diagonal.
fn bidiagonalize<T: Real>(w: &mut DMatrix<T>) -> (Vec<T>, Vec<T>) {
    let n = w.ncols();
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n.saturating_sub(1)];
    for k in 0..n {
        // left reflector on column k, rows k..m
        d[k] = reflect_column(w, k, k);
        if k + 1 < n {
            // right reflector on row k, columns k+1..n
            e[k] = reflect_row(w, k, k + 1);
        }
    }
    (d, e)
}

/// Householder reflector zeroing `w[row+1.., col]`; applied to columns
/// `col+1..`. Returns the resulting diagonal value.
fn reflect_column<T: Real>(w: &mut DMatrix<T>, row: usize, col: usize) -> T {
    let (m, n) = w.shape();
    let x: Vec<T> = (row..m).map(|i| w[(i, col)]).collect();
    let Some((v, beta, alpha)) = householder(&x) else {
        return w[(row, col)];
    };
    for j in (col + 1)..n {
        let s: T = v.iter().enumerate().map(|(t, &vt)| vt * w[(row + t, j)]).sum();
        let s = s * beta;
        for (t, &vt) in v.iter().enumerate() {
            w[(row + t, j)] -= s * vt;
        }
    }
    for i in row..m {
        w[(i, col)] = T::zero();
    }
    w[(row, col)] = alpha;
    alpha
}

/// Householder reflector zeroing `w[row, col+1..]`; applied to rows `row+1..`.
fn reflect_row<T: Real>(w: &mut DMatrix<T>, row: usize, col: usize) -> T {
    let (m, n) = w.shape();
    let x: Vec<T> = (col..n).map(|j| w[(row, j)]).collect();
    let Some((v, beta, alpha)) = householder(&x) else {
        return w[(row, col)];
    };
    for i in (row + 1)..m {
        let s: T = v.iter().enumerate().map(|(t, &vt)| vt * w[(i, col + t)]).sum();
        let s = s * beta;
        for (t, &vt) in v.iter().enumerate() {
            w[(i, col + t)] -= s * vt;
        }
    }
    for j in col..n {
        w[(row, j)] = T::zero();
    }
    w[(row, col)] = alpha;
    alpha
}

/// Householder vector `v` and `beta` with `(I - beta v vᵀ) x = alpha e1`.
/// `None` when `x` is already zero below its first entry.
pub(crate) fn householder<T: Real>(x: &[T]) -> Option<(Vec<T>, T, T)> {
    let norm = super::norm(x);
    if norm == T::zero() {
        return None;
    }
    let tail_zero = x[1..].iter().all(|&t| t == T::zero());
    if tail_zero {
        return None;
    }
    let alpha = if x[0] > T::zero() { -norm } else { norm };
    let mut v = x.to_vec();
    v[0] -= alpha;
    let vnorm2: T = v.iter().map(|&t| t * t).sum();
    Some((v, T::lit(2.0) / vnorm2, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn diagonal_matrix() {
        let a = DMatrix::<f64>::from_row_slice(3, 2, &[3.0, 0.0, 0.0, -4.0, 0.0, 0.0]);
        let sv = singular_values(&a).unwrap();
        assert!((sv[0] - 4.0).abs() < 1e-14 && (sv[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn matches_nalgebra_svd() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for (m, n) in [(5, 3), (3, 5), (12, 12), (30, 7)] {
            let a = DMatrix::<f64>::from_fn(m, n, |_, _| rng.random_range(-1.0..1.0));
            let ours = singular_values(&a).unwrap();
            let mut theirs: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
            theirs.sort_by(|x, y| y.partial_cmp(x).unwrap());
            for (x, y) in ours.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn rank_of_low_rank_product() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let u = DMatrix::<f64>::from_fn(20, 4, |_, _| rng.random_range(-1.0..1.0));
        let v = DMatrix::<f64>::from_fn(4, 15, |_, _| rng.random_range(-1.0..1.0));
        assert_eq!(numerical_rank(&(u * v), None).unwrap(), 4);
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(3, 3), None).unwrap(), 0);
    }
}
