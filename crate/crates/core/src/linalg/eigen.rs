//! Symmetric eigendecomposition: Householder tridiagonalization followed by
//! the implicit QL iteration.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<T: Real> {
    pub values: Vec<T>,
    /// Column `j` is the unit eigenvector for `values[j]`.
    pub vectors: DMatrix<T>,
}

/// Full eigendecomposition of the symmetric matrix `a` (only the lower
/// triangle is read).
pub fn symmetric_eigen<T: Real>(a: &DMatrix<T>) -> Result<SymmetricEigen<T>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            what: "square matrix",
            expected: n,
            got: a.ncols(),
        });
    }
    if n == 0 {
        return Ok(SymmetricEigen {
            values: Vec::new(),
            vectors: DMatrix::from_element(0, 0, T::zero()),
        });
    }
    let mut v = a.clone();
    for j in 0..n {
        for i in 0..j {
            v[(i, j)] = v[(j, i)];
        }
    }
    let mut d = vec![T::zero(); n];
    let mut e = vec![T::zero(); n];
    tridiagonalize(&mut v, &mut d, &mut e);
    ql_implicit(&mut d, &mut e, Some(&mut v))?;
    Ok(sort_pairs(d, v))
}

/// Eigenpairs of the symmetric tridiagonal matrix with the given diagonal and
/// sub-diagonal (`offdiag.len() == diag.len() - 1`).
pub fn tridiagonal_eigen<T: Real>(
    diag: &[T],
    offdiag: &[T],
    want_vectors: bool,
) -> Result<SymmetricEigen<T>> {
    let n = diag.len();
    assert!(n == 0 || offdiag.len() + 1 == n, "sub-diagonal length");
    let mut d = diag.to_vec();
    // ql_implicit expects e[i] = T[i, i-1] with e[0] unused
    let mut e = vec![T::zero(); n];
    for i in 1..n {
        e[i] = offdiag[i - 1];
    }
    if want_vectors {
        let mut v = DMatrix::identity(n, n);
        ql_implicit(&mut d, &mut e, Some(&mut v))?;
        Ok(sort_pairs(d, v))
    } else {
        ql_implicit(&mut d, &mut e, None)?;
        d.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(SymmetricEigen {
            values: d,
            vectors: DMatrix::from_element(0, 0, T::zero()),
        })
    }
}

fn sort_pairs<T: Real>(d: Vec<T>, v: DMatrix<T>) -> SymmetricEigen<T> {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap().then(i.cmp(&j)));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = DMatrix::from_element(n, n, T::zero());
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    SymmetricEigen { values, vectors }
}

/// Householder reduction of the symmetric matrix stored in `v` to tridiagonal
/// form. On return `d` holds the diagonal, `e[1..]` the sub-diagonal and `v`
/// the accumulated orthogonal transformation.
fn tridiagonalize<T: Real>(v: &mut DMatrix<T>, d: &mut [T], e: &mut [T]) {
    let n = d.len();
    let zero = T::zero();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }
    for i in (1..n).rev() {
        let mut scale = zero;
        let mut h = zero;
        for k in 0..i {
            scale += d[k].abs();
        }
        if scale == zero {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
                v[(j, i)] = zero;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > zero {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = zero;
            }
            for j in 0..i {
                f = d[j];
                v[(j, i)] = f;
                g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            f = zero;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    let upd = f * e[k] + g * d[k];
                    v[(k, j)] -= upd;
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = zero;
            }
        }
        d[i] = h;
    }
    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = T::one();
        let h = d[i + 1];
        if h != zero {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = zero;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    let upd = g * d[k];
                    v[(k, j)] -= upd;
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = zero;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = zero;
    }
    v[(n - 1, n - 1)] = T::one();
    e[0] = zero;
}

/// Implicit QL iteration with Wilkinson-type shifts on the tridiagonal matrix
/// (`d`, `e[1..]`). Eigenvectors are accumulated into `v` when provided.
fn ql_implicit<T: Real>(d: &mut [T], e: &mut [T], mut v: Option<&mut DMatrix<T>>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = zero;

    let mut f = zero;
    let mut tst1 = zero;
    let eps = T::epsilon();
    let max_sweeps = 60 * n.max(1);
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m == n {
            m = n - 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > max_sweeps {
                    return Err(Error::NonConvergence {
                        iterations: iter,
                        residual: e[l].abs().as_f64(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (two * e[l]);
                let mut r = p.hypot(one);
                if p < zero {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = one;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = zero;
                let mut s2 = zero;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(v) = v.as_deref_mut() {
                        for k in 0..n {
                            let hk = v[(k, i + 1)];
                            let vi = v[(k, i)];
                            v[(k, i + 1)] = s * vi + c * hk;
                            v[(k, i)] = c * vi - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = zero;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(a: &DMatrix<f64>, eig: &SymmetricEigen<f64>) -> f64 {
        let lambda = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.values.clone()));
        let r = a * &eig.vectors - &eig.vectors * lambda;
        r.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }

    #[test]
    fn path_laplacian() {
        let a = DMatrix::<f64>::from_row_slice(3, 3, &[1.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 1.0]);
        let eig = symmetric_eigen(&a).unwrap();
        assert!((eig.values[0]).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
        assert!((eig.values[2] - 3.0).abs() < 1e-14);
        assert!(residual(&a, &eig) < 1e-13);
        let vtv = eig.vectors.transpose() * &eig.vectors;
        assert!((vtv - DMatrix::identity(3, 3)).amax() < 1e-14);
    }

    #[test]
    fn matches_nalgebra_on_random_symmetric() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [1usize, 2, 5, 17, 40] {
            let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let a = &b + b.transpose();
            let ours = symmetric_eigen(&a).unwrap();
            let mut theirs: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            theirs.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (x, y) in ours.values.iter().zip(&theirs) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
            assert!(residual(&a, &ours) < 1e-12);
        }
    }

    #[test]
    fn repeated_zero_eigenvalues() {
        let a = DMatrix::<f64>::zeros(4, 4);
        let eig = symmetric_eigen(&a).unwrap();
        assert!(eig.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn tridiagonal_values_only() {
        // zero-diagonal Golub-Kahan form of diag(3, 1): eigenvalues ±3, ±1
        let eig = tridiagonal_eigen::<f64>(&[0.0; 4], &[3.0, 0.0, 1.0], false).unwrap();
        let expect = [-3.0, -1.0, 1.0, 3.0];
        for (x, y) in eig.values.iter().zip(expect) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn f32_path() {
        let a = DMatrix::<f32>::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let eig = symmetric_eigen(&a).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-6);
        assert!((eig.values[1] - 3.0).abs() < 1e-6);
    }
}
