//! Householder QR, optionally with column pivoting.

use nalgebra::DMatrix;

use super::svd::householder;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct HouseholderQr<T: Real> {
    m: usize,
    n: usize,
    /// Reflector `k` acts on rows `k..m`; `None` when it is the identity.
    reflectors: Vec<Option<(Vec<T>, T)>>,
    /// Upper-trapezoidal factor, `min(m, n) × n`, columns in pivoted order.
    r: DMatrix<T>,
    /// `perm[j]` is the original index of pivoted column `j`.
    perm: Vec<usize>,
}

impl<T: Real> HouseholderQr<T> {
    /// Factor `a · P = Q · R`. Without pivoting `P = I`.
    pub fn new(a: &DMatrix<T>, pivot: bool) -> Self {
        let (m, n) = a.shape();
        let mut w = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let steps = m.min(n);
        let mut reflectors = Vec::with_capacity(steps);
        let mut col_norms: Vec<T> = (0..n)
            .map(|j| w.column(j).iter().map(|&x| x * x).sum())
            .collect();

        for k in 0..steps {
            if pivot {
                // largest remaining column; ties go to the lowest index
                let mut best = k;
                for j in (k + 1)..n {
                    if col_norms[j] > col_norms[best] {
                        best = j;
                    }
                }
                if best != k {
                    w.swap_columns(k, best);
                    perm.swap(k, best);
                    col_norms.swap(k, best);
                }
            }
            let x: Vec<T> = (k..m).map(|i| w[(i, k)]).collect();
            let refl = householder(&x);
            if let Some((v, beta, alpha)) = &refl {
                for j in (k + 1)..n {
                    let s: T = v.iter().enumerate().map(|(t, &vt)| vt * w[(k + t, j)]).sum();
                    let s = s * *beta;
                    for (t, &vt) in v.iter().enumerate() {
                        w[(k + t, j)] -= s * vt;
                    }
                }
                w[(k, k)] = *alpha;
                for i in (k + 1)..m {
                    w[(i, k)] = T::zero();
                }
            }
            reflectors.push(refl.map(|(v, beta, _)| (v, beta)));
            if pivot {
                // recompute rather than downdate; the sizes here are modest
                for j in (k + 1)..n {
                    col_norms[j] = ((k + 1)..m).map(|i| w[(i, j)] * w[(i, j)]).sum();
                }
            }
        }
        let r = DMatrix::from_fn(steps, n, |i, j| if i <= j { w[(i, j)] } else { T::zero() });
        Self {
            m,
            n,
            reflectors,
            r,
            perm,
        }
    }

    pub fn r(&self) -> &DMatrix<T> {
        &self.r
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn r_diagonal(&self) -> Vec<T> {
        (0..self.r.nrows()).map(|k| self.r[(k, k)]).collect()
    }

    /// Count of diagonal entries with `|R_kk| > rel_tol · |R_00|`. Meaningful
    /// for the pivoted factorization.
    pub fn rank(&self, rel_tol: T) -> usize {
        let diag = self.r_diagonal();
        let Some(first) = diag.first() else {
            return 0;
        };
        let cutoff = rel_tol * first.abs();
        diag.iter().take_while(|d| d.abs() > cutoff).count()
    }

    /// `Qᵀ b`
    pub fn apply_qt(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.m);
        let mut y = b.to_vec();
        for (k, refl) in self.reflectors.iter().enumerate() {
            if let Some((v, beta)) = refl {
                let s: T = v.iter().enumerate().map(|(t, &vt)| vt * y[k + t]).sum();
                let s = s * *beta;
                for (t, &vt) in v.iter().enumerate() {
                    y[k + t] -= s * vt;
                }
            }
        }
        y
    }

    /// `Q x` for `x` of length `m`.
    pub fn apply_q(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.m);
        let mut y = x.to_vec();
        for (k, refl) in self.reflectors.iter().enumerate().rev() {
            if let Some((v, beta)) = refl {
                let s: T = v.iter().enumerate().map(|(t, &vt)| vt * y[k + t]).sum();
                let s = s * *beta;
                for (t, &vt) in v.iter().enumerate() {
                    y[k + t] -= s * vt;
                }
            }
        }
        y
    }

    /// First `k` columns of `Q`.
    pub fn thin_q(&self, k: usize) -> DMatrix<T> {
        assert!(k <= self.m);
        let mut q = DMatrix::from_element(self.m, k, T::zero());
        let mut e = vec![T::zero(); self.m];
        for j in 0..k {
            e.iter_mut().for_each(|x| *x = T::zero());
            e[j] = T::one();
            let col = self.apply_q(&e);
            for i in 0..self.m {
                q[(i, j)] = col[i];
            }
        }
        q
    }

    /// Least-squares solution of `a x ≈ b` for full column rank `a` (no pivoting
    /// assumed unless `perm` is identity-compatible; the permutation is undone).
    pub fn solve_least_squares(&self, b: &[T]) -> Vec<T> {
        assert!(self.m >= self.n, "least squares needs m >= n");
        let y = self.apply_qt(b);
        let n = self.n;
        let mut z = vec![T::zero(); n];
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..n {
                s -= self.r[(i, j)] * z[j];
            }
            z[i] = s / self.r[(i, i)];
        }
        let mut x = vec![T::zero(); n];
        for (j, &p) in self.perm.iter().enumerate() {
            x[p] = z[j];
        }
        x
    }

    /// `(Aᵀ A)⁻¹ = P R⁻¹ R⁻ᵀ Pᵀ` for full column rank `A`.
    pub fn gram_inverse(&self) -> DMatrix<T> {
        let n = self.n;
        // R⁻¹ by back substitution
        let mut rinv = DMatrix::from_element(n, n, T::zero());
        for j in 0..n {
            rinv[(j, j)] = T::one() / self.r[(j, j)];
            for i in (0..j).rev() {
                let mut s = T::zero();
                for k in (i + 1)..=j {
                    s += self.r[(i, k)] * rinv[(k, j)];
                }
                rinv[(i, j)] = -s / self.r[(i, i)];
            }
        }
        let inner = &rinv * rinv.transpose();
        let mut out = DMatrix::from_element(n, n, T::zero());
        for a in 0..n {
            for b in 0..n {
                out[(self.perm[a], self.perm[b])] = inner[(a, b)];
            }
        }
        out
    }
}
