//! LSQR for `min ‖A x − b‖₂` with `A` available only through products.
//!
//! Follows the Paige–Saunders recurrence without damping.

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{norm, scale_in_place};

#[derive(Debug, Clone, Copy)]
pub struct LsqrOptions<T> {
    pub atol: T,
    pub btol: T,
    /// Stop once the condition estimate exceeds this; zero disables the test.
    pub conlim: T,
    pub iter_lim: usize,
}

impl<T: Real> LsqrOptions<T> {
    pub fn with_tolerance(tol: T, iter_lim: usize) -> Self {
        Self {
            atol: tol,
            btol: tol,
            conlim: T::zero(),
            iter_lim,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LsqrStop {
    /// `x = 0` is exact (b = 0 or Aᵀb = 0).
    Trivial,
    /// `A x = b` to within `btol`/`atol`.
    Compatible,
    /// Least-squares optimality `‖Aᵀr‖ ≤ atol ‖A‖ ‖r‖`.
    LeastSquares,
    ConditionLimit,
    /// Tolerances below machine precision were met at machine precision.
    MachinePrecision,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub struct LsqrOutcome<T> {
    pub x: Vec<T>,
    pub stop: LsqrStop,
    pub iterations: usize,
    /// Estimate of `‖b − A x‖`.
    pub residual_norm: T,
    /// Estimate of `‖Aᵀ(b − A x)‖`.
    pub normal_residual_norm: T,
    pub anorm: T,
    pub acond: T,
}

/// Solve `min ‖A x − b‖` where `a_mul(x) = A x` (length `m`) and
/// `at_mul(y) = Aᵀ y` (length `n`).
pub fn lsqr<T, F, G>(
    n: usize,
    a_mul: F,
    at_mul: G,
    b: &[T],
    opts: &LsqrOptions<T>,
) -> Result<LsqrOutcome<T>>
where
    T: Real,
    F: Fn(&[T]) -> Vec<T>,
    G: Fn(&[T]) -> Vec<T>,
{
    let zero = T::zero();
    let one = T::one();
    let eps = T::epsilon();
    let ctol = if opts.conlim > zero { one / opts.conlim } else { zero };

    let mut x = vec![zero; n];
    let mut u = b.to_vec();
    let bnorm = norm(&u);
    let mut beta = bnorm;
    if beta > zero {
        scale_in_place(one / beta, &mut u);
    }
    let mut v = if beta > zero { at_mul(&u) } else { vec![zero; n] };
    let mut alpha = norm(&v);
    if alpha > zero {
        scale_in_place(one / alpha, &mut v);
    }
    let mut w = v.clone();

    let mut rhobar = alpha;
    let mut phibar = beta;
    let mut rnorm = beta;
    let mut arnorm = alpha * beta;
    let mut anorm = zero;
    let mut acond = zero;
    if arnorm == zero {
        return Ok(LsqrOutcome {
            x,
            stop: LsqrStop::Trivial,
            iterations: 0,
            residual_norm: rnorm,
            normal_residual_norm: arnorm,
            anorm,
            acond,
        });
    }

    let mut ddnorm = zero;
    let mut xxnorm = zero;
    let mut z = zero;
    let mut cs2 = -one;
    let mut sn2 = zero;
    let mut itn = 0;
    let mut stop = LsqrStop::IterationLimit;

    while itn < opts.iter_lim {
        itn += 1;
        // bidiagonalization step
        let av = a_mul(&v);
        for (ui, avi) in u.iter_mut().zip(av) {
            *ui = avi - alpha * *ui;
        }
        beta = norm(&u);
        if beta > zero {
            scale_in_place(one / beta, &mut u);
            anorm = (anorm * anorm + alpha * alpha + beta * beta).sqrt();
            let atu = at_mul(&u);
            for (vi, atui) in v.iter_mut().zip(atu) {
                *vi = atui - beta * *vi;
            }
            alpha = norm(&v);
            if alpha > zero {
                scale_in_place(one / alpha, &mut v);
            }
        }

        // plane rotation eliminating the sub-diagonal
        let rho = rhobar.hypot(beta);
        let cs = rhobar / rho;
        let sn = beta / rho;
        let theta = sn * alpha;
        rhobar = -cs * alpha;
        let phi = cs * phibar;
        phibar = sn * phibar;
        let tau = sn * phi;

        let t1 = phi / rho;
        let t2 = -theta / rho;
        let mut dk2 = zero;
        for ((xi, wi), &vi) in x.iter_mut().zip(w.iter_mut()).zip(&v) {
            let dk = *wi / rho;
            dk2 += dk * dk;
            *xi += t1 * *wi;
            *wi = vi + t2 * *wi;
        }
        ddnorm += dk2;

        // estimate ‖x‖
        let delta = sn2 * rho;
        let gambar = -cs2 * rho;
        let rhs = phi - delta * z;
        let zbar = rhs / gambar;
        let xnorm = (xxnorm + zbar * zbar).sqrt();
        let gamma = gambar.hypot(theta);
        cs2 = gambar / gamma;
        sn2 = theta / gamma;
        z = rhs / gamma;
        xxnorm += z * z;

        acond = anorm * ddnorm.sqrt();
        rnorm = phibar;
        arnorm = alpha * tau.abs();

        let test1 = rnorm / bnorm;
        let test2 = arnorm / (anorm * rnorm + eps);
        let test3 = one / (acond + eps);
        let t1 = test1 / (one + anorm * xnorm / bnorm);
        let rtol = opts.btol + opts.atol * anorm * xnorm / bnorm;

        let mut istop = None;
        if one + test3 <= one || one + test2 <= one || one + t1 <= one {
            istop = Some(LsqrStop::MachinePrecision);
        }
        if test3 <= ctol {
            istop = Some(LsqrStop::ConditionLimit);
        }
        if test2 <= opts.atol {
            istop = Some(LsqrStop::LeastSquares);
        }
        if test1 <= rtol {
            istop = Some(LsqrStop::Compatible);
        }
        if let Some(s) = istop {
            stop = s;
            break;
        }
    }

    if stop == LsqrStop::IterationLimit {
        return Err(Error::NonConvergence {
            iterations: itn,
            residual: (arnorm / (anorm * rnorm + eps)).as_f64(),
        });
    }
    Ok(LsqrOutcome {
        x,
        stop,
        iterations: itn,
        residual_norm: rnorm,
        normal_residual_norm: arnorm,
        anorm,
        acond,
    })
}
