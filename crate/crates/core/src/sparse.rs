//! Compressed sparse column matrices.
//!
//! Columns are stored in index order and row indices within a column are
//! strictly increasing, so iteration order (and therefore every floating-point
//! reduction built on it) is deterministic.

use std::ops::Mul;

use nalgebra::{DMatrix, DVector};
use num_traits::{Num, NumCast};

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix<T> {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Copy + Num> CscMatrix<T> {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Assemble from `(row, col, value)` triplets. Duplicates are summed and
    /// explicit zeros (after summation) are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut sorted: Vec<(usize, usize, T)> = triplets.to_vec();
        for &(r, c, _) in &sorted {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) out of bounds");
        }
        sorted.sort_by_key(|&(r, c, _)| (c, r));

        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<T> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        let mut cols = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                let top = values.last_mut().unwrap();
                *top = *top + v;
            } else {
                row_idx.push(r);
                values.push(v);
                cols.push(c);
                last = Some((r, c));
            }
        }
        // drop summed-out zeros
        let mut keep_rows = Vec::with_capacity(row_idx.len());
        let mut keep_vals = Vec::with_capacity(values.len());
        for ((r, v), c) in row_idx.into_iter().zip(values).zip(cols) {
            if !v.is_zero() {
                keep_rows.push(r);
                keep_vals.push(v);
                col_ptr[c + 1] += 1;
            }
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        Self {
            nrows,
            ncols,
            col_ptr,
            row_idx: keep_rows,
            values: keep_vals,
        }
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &[T]) -> Self {
        let trip: Vec<_> = diag.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
        Self::from_triplets(diag.len(), diag.len(), &trip)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of column `j` as `(row, value)` pairs in increasing row order.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All stored entries as `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.ncols).flat_map(move |c| self.column(c).map(move |(r, v)| (r, c, v)))
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let span = self.col_ptr[col]..self.col_ptr[col + 1];
        match self.row_idx[span.clone()].binary_search(&row) {
            Ok(k) => self.values[span.start + k],
            Err(_) => T::zero(),
        }
    }

    pub fn transpose(&self) -> Self {
        let trip: Vec<_> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        Self::from_triplets(self.ncols, self.nrows, &trip)
    }

    pub fn map<U: Copy + Num>(&self, f: impl Fn(T) -> U) -> CscMatrix<U> {
        let trip: Vec<_> = self.triplets().map(|(r, c, v)| (r, c, f(v))).collect();
        CscMatrix::from_triplets(self.nrows, self.ncols, &trip)
    }

    /// Cast every entry to another numeric type.
    pub fn cast<U: Copy + Num + NumCast>(&self) -> CscMatrix<U>
    where
        T: NumCast,
    {
        self.map(|v| U::from(v).expect("representable entry"))
    }

    /// Sparse product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.ncols, rhs.nrows, "inner dimensions differ");
        let mut trip = Vec::new();
        let mut acc = vec![T::zero(); self.nrows];
        let mut touched = vec![false; self.nrows];
        let mut rows = Vec::new();
        for j in 0..rhs.ncols {
            for (k, b) in rhs.column(j) {
                for (i, a) in self.column(k) {
                    if !touched[i] {
                        touched[i] = true;
                        rows.push(i);
                    }
                    acc[i] = acc[i] + a * b;
                }
            }
            rows.sort_unstable();
            for &i in &rows {
                trip.push((i, j, acc[i]));
                acc[i] = T::zero();
                touched[i] = false;
            }
            rows.clear();
        }
        Self::from_triplets(self.nrows, rhs.ncols, &trip)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let trip: Vec<_> = self.triplets().chain(rhs.triplets()).collect();
        Self::from_triplets(self.nrows, self.ncols, &trip)
    }

    /// `diag(left) * self * diag(right)`; either side may be omitted.
    pub fn scale(&self, left: Option<&[T]>, right: Option<&[T]>) -> Self {
        if let Some(l) = left {
            assert_eq!(l.len(), self.nrows);
        }
        if let Some(r) = right {
            assert_eq!(r.len(), self.ncols);
        }
        let trip: Vec<_> = self
            .triplets()
            .map(|(r, c, v)| {
                let v = left.map_or(v, |l| l[r] * v);
                (r, c, right.map_or(v, |rr| v * rr[c]))
            })
            .collect();
        Self::from_triplets(self.nrows, self.ncols, &trip)
    }

    pub fn is_symmetric(&self) -> bool {
        self.nrows == self.ncols && self.triplets().all(|(r, c, v)| self.get(c, r) == v)
    }
}

impl<T: Real> CscMatrix<T> {
    /// `y = A x`
    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![T::zero(); self.nrows];
        for (j, &xj) in x.iter().enumerate() {
            if xj == T::zero() {
                continue;
            }
            for (i, a) in self.column(j) {
                y[i] += a * xj;
            }
        }
        y
    }

    /// `y = Aᵀ x`
    pub fn tr_mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.nrows);
        (0..self.ncols)
            .map(|j| self.column(j).map(|(i, a)| a * x[i]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::from_element(self.nrows, self.ncols, T::zero());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Frobenius norm.
    pub fn norm_frobenius(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>().sqrt()
    }
}

impl<'a, T: Real> Mul<&'a DVector<T>> for &'a CscMatrix<T> {
    type Output = DVector<T>;

    fn mul(self, rhs: &'a DVector<T>) -> DVector<T> {
        DVector::from_vec(self.mul_vec(rhs.as_slice()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed_and_zeros_dropped() {
        let m = CscMatrix::from_triplets(2, 2, &[(0, 0, 1), (0, 0, 2), (1, 1, 1), (1, 1, -1)]);
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 0), 3);
        assert_eq!(m.get(1, 1), 0);
    }

    #[test]
    fn product_matches_dense() {
        let a = CscMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (1, 1, 2.0), (0, 2, -1.0)]);
        let b = CscMatrix::from_triplets(3, 2, &[(0, 0, 1.0), (2, 0, 1.0), (1, 1, 3.0)]);
        let dense = a.to_dense() * b.to_dense();
        assert_eq!(a.matmul(&b).to_dense(), dense);
    }

    #[test]
    fn transpose_products() {
        let a = CscMatrix::from_triplets(2, 3, &[(0, 0, 1.0), (1, 1, 2.0), (0, 2, -1.0)]);
        let x = [1.0, 2.0, 3.0];
        assert_eq!(a.mul_vec(&x), vec![-2.0, 4.0]);
        assert_eq!(a.tr_mul_vec(&[1.0, 1.0]), vec![1.0, 2.0, -1.0]);
        assert_eq!(a.transpose().mul_vec(&[1.0, 1.0]), a.tr_mul_vec(&[1.0, 1.0]));
    }
}
