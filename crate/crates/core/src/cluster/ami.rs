//! Adjusted mutual information with the arithmetic-mean normalizer and the
//! hypergeometric expectation of mutual information.

use std::collections::BTreeMap;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Contingency table of two label vectors of equal length.
#[derive(Debug, Clone)]
pub struct Contingency {
    pub n: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub cells: Vec<Vec<usize>>,
}

impl Contingency {
    pub fn new(a: &[usize], b: &[usize]) -> Self {
        assert_eq!(a.len(), b.len());
        let index = |v: &[usize]| -> BTreeMap<usize, usize> {
            let mut m = BTreeMap::new();
            for &x in v {
                let next = m.len();
                m.entry(x).or_insert(next);
            }
            m
        };
        let (ia, ib) = (index(a), index(b));
        let mut cells = vec![vec![0; ib.len()]; ia.len()];
        for (x, y) in a.iter().zip(b) {
            cells[ia[x]][ib[y]] += 1;
        }
        let rows = cells.iter().map(|r| r.iter().sum()).collect();
        let cols = (0..ib.len()).map(|j| cells.iter().map(|r| r[j]).sum()).collect();
        Self {
            n: a.len(),
            rows,
            cols,
            cells,
        }
    }
}

fn entropy(counts: &[usize], n: usize) -> f64 {
    let n = n as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

pub fn mutual_information(t: &Contingency) -> f64 {
    let n = t.n as f64;
    let mut mi = 0.0;
    for (i, row) in t.cells.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (n * c / (t.rows[i] as f64 * t.cols[j] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

/// `E[MI]` when both marginals are held fixed and labels are randomly paired.
pub fn expected_mutual_information(t: &Contingency) -> f64 {
    let n = t.n;
    let nf = n as f64;
    let lg = |x: usize| ln_gamma(x as f64 + 1.0);
    let lg_n = lg(n);
    let mut emi = 0.0;
    for &a in &t.rows {
        for &b in &t.cols {
            let lo = (a + b).saturating_sub(n).max(1);
            let hi = a.min(b);
            let fixed = lg(a) + lg(b) + lg(n - a) + lg(n - b) - lg_n;
            for nij in lo..=hi {
                let v = nij as f64;
                let term = v / nf * (nf * v / (a as f64 * b as f64)).ln();
                let log_p = fixed - lg(nij) - lg(a - nij) - lg(b - nij) - lg(n + nij - a - b);
                emi += term * log_p.exp();
            }
        }
    }
    emi
}

/// AMI of two labelings of the same items.
///
/// Two single-cluster labelings count as identical (1.0).
pub fn ami_labels(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "label vectors",
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewCommonEdges(a.len()));
    }
    let t = Contingency::new(a, b);
    if t.rows.len() == 1 && t.cols.len() == 1 {
        return Ok(1.0);
    }
    let mi = mutual_information(&t);
    let emi = expected_mutual_information(&t);
    let normalizer = 0.5 * (entropy(&t.rows, t.n) + entropy(&t.cols, t.n));
    let mut denom = normalizer - emi;
    let eps = f64::EPSILON;
    denom = if denom < 0.0 { denom.min(-eps) } else { denom.max(eps) };
    Ok((mi - emi) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `E[MI]` by enumerating every permutation of `b` against `a`.
    fn brute_force_emi(a: &[usize], b: &[usize]) -> f64 {
        let mut perm = b.to_vec();
        let mut total = 0.0;
        let mut count = 0usize;
        permute(&mut perm, 0, &mut |p| {
            total += mutual_information(&Contingency::new(a, p));
            count += 1;
        });
        total / count as f64
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut dyn FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn expectation_matches_enumeration() {
        let cases: [(&[usize], &[usize]); 3] = [
            (&[0, 0, 1, 1, 2, 2], &[0, 1, 1, 1, 2, 0]),
            (&[0, 0, 0, 1, 1, 2, 2], &[0, 0, 1, 1, 1, 1, 2]),
            (&[0, 1, 0, 1, 0], &[0, 0, 0, 1, 1]),
        ];
        for (a, b) in cases {
            let exact = brute_force_emi(a, b);
            let fast = expected_mutual_information(&Contingency::new(a, b));
            assert!((exact - fast).abs() < 1e-12, "{exact} vs {fast}");
        }
    }

    #[test]
    fn identical_and_permuted() {
        let a = [0, 0, 1, 1, 2, 2, 2];
        let b = [5, 5, 3, 3, 9, 9, 9];
        assert!((ami_labels(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!((ami_labels(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_side_is_zero() {
        assert_eq!(ami_labels(&[0, 0, 1, 1], &[4, 4, 4, 4]).unwrap(), 0.0);
        assert_eq!(ami_labels(&[1, 1, 1], &[2, 2, 2]).unwrap(), 1.0);
    }

    #[test]
    fn too_few_items() {
        assert!(matches!(ami_labels(&[0], &[0]), Err(Error::TooFewCommonEdges(1))));
    }
}
