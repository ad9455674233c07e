use num_rational::Rational64;
use proptest::prelude::*;

use hodgeflow::complex::{antisymmetrize, betti, build_clique_complex, EdgeFlow, FlowNetwork, NodeOrder, OrientedComplex};
use hodgeflow::hodge::{harmonic_basis, laplacian_l0, laplacian_l1, HarmonicOptions, Mode};
use hodgeflow::synth::random_support;

fn complex(n: usize, p: f64, seed: u64) -> OrientedComplex {
    build_clique_complex(&random_support(n, p, seed).unwrap()).unwrap()
}

/// Rank by exact Gaussian elimination over the rationals.
fn exact_rank(rows: usize, cols: usize, entry: impl Fn(usize, usize) -> i64) -> usize {
    let mut m: Vec<Vec<Rational64>> = (0..rows)
        .map(|i| (0..cols).map(|j| Rational64::from_integer(entry(i, j))).collect())
        .collect();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| m[r][c] != Rational64::from_integer(0)) else {
            continue;
        };
        m.swap(rank, p);
        for r in 0..rows {
            if r != rank && m[r][c] != Rational64::from_integer(0) {
                let f = m[r][c] / m[rank][c];
                for k in c..cols {
                    let v = m[rank][k];
                    m[r][k] -= f * v;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn brute_triangles(c: &OrientedComplex) -> usize {
    let n = c.n0();
    let adj = |i: usize, j: usize| c.edge_index(i.min(j), i.max(j)).is_some();
    let mut count = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                if adj(i, j) && adj(i, k) && adj(j, k) {
                    count += 1;
                }
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_of_boundary_vanishes(n in 2usize..16, p in 0.1f64..0.9, seed in any::<u64>()) {
        let c = complex(n, p, seed);
        let prod = c.b1().matmul(c.b2());
        prop_assert!(prod.triplets().all(|(_, _, v)| v == 0));
    }

    #[test]
    fn node_laplacian_is_degree_minus_adjacency(n in 2usize..16, p in 0.1f64..0.9, seed in any::<u64>()) {
        let c = complex(n, p, seed);
        let l0 = laplacian_l0::<f64>(&c).matrix.to_dense();
        for i in 0..n {
            for j in 0..n {
                let expected = if i == j {
                    c.edges().iter().filter(|&&(a, b)| a == i || b == i).count() as f64
                } else if c.edge_index(i.min(j), i.max(j)).is_some() {
                    -1.0
                } else {
                    0.0
                };
                prop_assert_eq!(l0[(i, j)], expected);
            }
        }
    }

    #[test]
    fn triangles_match_brute_force(n in 3usize..14, p in 0.1f64..0.9, seed in any::<u64>()) {
        let c = complex(n, p, seed);
        prop_assert_eq!(c.n2(), brute_triangles(&c));
        for &(i, j, k) in c.triangles() {
            prop_assert!(i < j && j < k);
        }
    }

    #[test]
    fn betti_matches_exact_ranks(n in 2usize..14, p in 0.1f64..0.8, seed in any::<u64>()) {
        let c = complex(n, p, seed);
        let (b1, b2) = (c.b1(), c.b2());
        let r1 = exact_rank(c.n0(), c.n1(), |i, j| b1.get(i, j) as i64);
        let r2 = exact_rank(c.n1(), c.n2(), |i, j| b2.get(i, j) as i64);
        let b = betti(&c, None).unwrap();
        prop_assert_eq!(b.beta0, c.n0() - r1);
        prop_assert_eq!(b.beta1, c.n1() - r1 - r2);
        for mode in [Mode::Unnormalized, Mode::Normalized] {
            let dim = harmonic_basis::<f64>(&c, &HarmonicOptions::new(mode)).unwrap().dim();
            prop_assert_eq!(dim, b.beta1);
        }
    }

    #[test]
    fn edge_laplacian_is_symmetric_psd_diagonal(n in 2usize..14, p in 0.1f64..0.9, seed in any::<u64>()) {
        let c = complex(n, p, seed);
        let l1 = laplacian_l1::<f64>(&c).matrix;
        prop_assert!(l1.is_symmetric());
        // diagonal entry of B1ᵀB1 is 2, each incident triangle adds 1
        let deg = c.edge_triangle_degrees();
        for e in 0..c.n1() {
            prop_assert_eq!(l1.get(e, e), 2.0 + deg[e] as f64);
        }
    }

    #[test]
    fn antisymmetrize_is_odd(arcs in proptest::collection::vec((0u8..8, 0u8..8, 0.0f64..5.0), 1..30)) {
        let arcs: Vec<(String, String, f64)> = arcs
            .into_iter()
            .filter(|(a, b, _)| a != b)
            .map(|(a, b, w)| (format!("n{a}"), format!("n{b}"), w))
            .collect();
        let net = FlowNetwork::new("r", 2017, arcs).unwrap();
        let (s, f) = antisymmetrize::<f64>(&net, &NodeOrder::Lexicographic).unwrap();
        let (s_rev, f_rev) = antisymmetrize::<f64>(&net.reversed(), &NodeOrder::Lexicographic).unwrap();
        prop_assert_eq!(s, s_rev);
        let neg: EdgeFlow<f64> = f.scaled(-1.0);
        prop_assert_eq!(neg, f_rev);
    }
}

#[test]
fn complete_graph_counts() {
    let c = complex(6, 1.0, 0);
    assert_eq!((c.n0(), c.n1(), c.n2()), (6, 15, 20));
    let b = betti(&c, None).unwrap();
    assert_eq!((b.beta0, b.beta1), (1, 0));
}

#[test]
fn disjoint_cycles_have_two_holes() {
    let c = hodgeflow::complex::complex_from_edges(8, &[(0, 1), (1, 2), (2, 3), (0, 3), (4, 5), (5, 6), (6, 7), (4, 7)]).unwrap();
    let b = betti(&c, None).unwrap();
    assert_eq!((b.beta0, b.beta1), (2, 2));
}
