//! Block Krylov (Lanczos-type) eigensolver for the largest eigenpairs of a
//! symmetric operator, plus conjugate gradients for shift-invert use.
//!
//! The basis is kept fully reorthogonalized and each pass performs an explicit
//! Rayleigh–Ritz projection, so convergence is judged on true residuals
//! `‖A y − θ y‖` rather than recurrence estimates.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::eigen::symmetric_eigen;
use super::{axpy, dot, norm, scale_in_place};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct LanczosOptions<T> {
    pub block_size: usize,
    /// Basis size at which the search space is restarted from the current
    /// best Ritz vectors.
    pub max_basis: usize,
    /// Relative residual tolerance `‖A y − θ y‖ ≤ tol · max(|θ|, scale)`.
    pub tol: T,
    pub max_passes: usize,
    pub seed: u64,
}

impl<T: Real> Default for LanczosOptions<T> {
    fn default() -> Self {
        Self {
            block_size: 8,
            max_basis: 240,
            tol: T::lit(1e-10),
            max_passes: 200,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosResult<T: Real> {
    /// Ritz values, decreasing.
    pub values: Vec<T>,
    /// Matching unit Ritz vectors as columns.
    pub vectors: DMatrix<T>,
    pub residuals: Vec<T>,
    pub operator_applications: usize,
}

/// Largest `nev` eigenpairs of the symmetric operator `op` on `R^n`.
///
/// `deflate` holds orthonormal vectors whose span is excluded from the search.
pub fn lanczos_largest<T, F>(
    op: F,
    n: usize,
    nev: usize,
    deflate: &[Vec<T>],
    opts: &LanczosOptions<T>,
) -> Result<LanczosResult<T>>
where
    T: Real,
    F: Fn(&[T]) -> Vec<T>,
{
    let avail = n.saturating_sub(deflate.len());
    let nev = nev.min(avail);
    if nev == 0 {
        return Ok(LanczosResult {
            values: Vec::new(),
            vectors: DMatrix::from_element(n, 0, T::zero()),
            residuals: Vec::new(),
            operator_applications: 0,
        });
    }
    let block = opts.block_size.max(nev).max(1);
    let max_basis = opts.max_basis.max(2 * block + nev).min(avail);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut applications = 0;

    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut images: Vec<Vec<T>> = Vec::new();
    let mut pending: Vec<Vec<T>> = (0..block)
        .map(|_| (0..n).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect())
        .collect();
    let mut op_scale = T::zero();

    for _pass in 0..opts.max_passes {
        // extend the basis with whatever survives orthogonalization
        let mut added = 0;
        for mut v in pending.drain(..) {
            if orthonormalize_against(&mut v, deflate, &basis) {
                let mut av = op(&v);
                applications += 1;
                // keep the image inside the deflated space
                for d in deflate {
                    let c = dot(d, &av);
                    axpy(-c, d, &mut av);
                }
                op_scale = op_scale.max(norm(&av));
                basis.push(v);
                images.push(av);
                added += 1;
                if basis.len() == avail {
                    break;
                }
            }
        }
        if added == 0 && basis.len() < avail {
            // stagnation: inject fresh random directions
            pending = (0..block)
                .map(|_| (0..n).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect())
                .collect();
            continue;
        }

        let (theta, ritz, resid_vecs, resid) = rayleigh_ritz(&basis, &images, n)?;
        let k = theta.len();
        let want = nev.min(k);
        let scale = op_scale.max(T::min_positive_value());
        let converged = (0..want).all(|i| resid[i] <= opts.tol * theta[i].abs().max(scale * T::epsilon().sqrt()));
        if converged || basis.len() == avail {
            let vectors = DMatrix::from_fn(n, want, |r, c| ritz[c][r]);
            return Ok(LanczosResult {
                values: theta[..want].to_vec(),
                vectors,
                residuals: resid[..want].to_vec(),
                operator_applications: applications,
            });
        }

        // next block: residual directions of the leading unconverged pairs
        let mut next = Vec::new();
        for i in 0..k {
            if next.len() == block {
                break;
            }
            if resid[i] > opts.tol * theta[i].abs().max(scale * T::epsilon().sqrt()) {
                next.push(resid_vecs[i].clone());
            }
        }
        if basis.len() + next.len() > max_basis {
            // thick restart from the best Ritz vectors
            let keep = (want + block).min(k);
            let mut new_basis = Vec::with_capacity(keep);
            let mut new_images = Vec::with_capacity(keep);
            let (_, _, s) = ritz_coefficients(&basis, &images)?;
            for c in 0..keep {
                let mut y = vec![T::zero(); n];
                let mut z = vec![T::zero(); n];
                for (j, (b, im)) in basis.iter().zip(&images).enumerate() {
                    axpy(s[(j, c)], b, &mut y);
                    axpy(s[(j, c)], im, &mut z);
                }
                new_basis.push(y);
                new_images.push(z);
            }
            basis = new_basis;
            images = new_images;
        }
        pending = next;
    }
    Err(Error::NonConvergence {
        iterations: applications,
        residual: f64::NAN,
    })
}

/// Orthonormalize `v` against the deflation set and the basis (two passes).
/// Returns false when `v` is numerically contained in their span.
fn orthonormalize_against<T: Real>(v: &mut Vec<T>, deflate: &[Vec<T>], basis: &[Vec<T>]) -> bool {
    let start = norm(v);
    if start == T::zero() {
        return false;
    }
    for _ in 0..2 {
        for q in deflate.iter().chain(basis) {
            let c = dot(q, v);
            axpy(-c, q, v);
        }
    }
    let after = norm(v);
    if after <= T::lit(1e-10) * start {
        return false;
    }
    scale_in_place(T::one() / after, v);
    true
}

type RitzParts<T> = (Vec<T>, Vec<Vec<T>>, Vec<Vec<T>>, Vec<T>);

fn ritz_coefficients<T: Real>(basis: &[Vec<T>], images: &[Vec<T>]) -> Result<(usize, Vec<T>, DMatrix<T>)> {
    let k = basis.len();
    let mut h = DMatrix::from_element(k, k, T::zero());
    for i in 0..k {
        for j in 0..=i {
            let hij = (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i])) * T::lit(0.5);
            h[(i, j)] = hij;
            h[(j, i)] = hij;
        }
    }
    let eig = symmetric_eigen(&h)?;
    // reorder decreasing
    let mut s = DMatrix::from_element(k, k, T::zero());
    let mut theta = Vec::with_capacity(k);
    for c in 0..k {
        let src = k - 1 - c;
        theta.push(eig.values[src]);
        s.set_column(c, &eig.vectors.column(src));
    }
    Ok((k, theta, s))
}

fn rayleigh_ritz<T: Real>(basis: &[Vec<T>], images: &[Vec<T>], n: usize) -> Result<RitzParts<T>> {
    let (k, theta, s) = ritz_coefficients(basis, images)?;
    let mut ritz = Vec::with_capacity(k);
    let mut resid_vecs = Vec::with_capacity(k);
    let mut resid = Vec::with_capacity(k);
    for c in 0..k {
        let mut y = vec![T::zero(); n];
        let mut z = vec![T::zero(); n];
        for (j, (b, im)) in basis.iter().zip(images).enumerate() {
            axpy(s[(j, c)], b, &mut y);
            axpy(s[(j, c)], im, &mut z);
        }
        axpy(-theta[c], &y, &mut z);
        resid.push(norm(&z));
        ritz.push(y);
        resid_vecs.push(z);
    }
    Ok((theta, ritz, resid_vecs, resid))
}

/// Conjugate gradients for the symmetric positive definite system `A x = b`.
/// Stops when `‖b − A x‖ ≤ rel_tol · ‖b‖`.
pub fn conjugate_gradient<T, F>(op: F, b: &[T], rel_tol: T, max_iter: usize) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(&[T]) -> Vec<T>,
{
    let n = b.len();
    let mut x = vec![T::zero(); n];
    let bnorm = norm(b);
    if bnorm == T::zero() {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for it in 0..max_iter {
        let ap = op(&p);
        let pap = dot(&p, &ap);
        if pap <= T::zero() {
            return Err(Error::NonConvergence {
                iterations: it,
                residual: (rr.sqrt() / bnorm).as_f64(),
            });
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= rel_tol * bnorm {
            return Ok(x);
        }
        let beta = rr_new / rr;
        for (pi, &ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        rr = rr_new;
    }
    Err(Error::NonConvergence {
        iterations: max_iter,
        residual: (rr.sqrt() / bnorm).as_f64(),
    })
}
