//! Oriented clique complexes built from directed weighted flow networks.
//!
//! Nodes are totally ordered (lexicographically by id unless a custom order is
//! supplied) and every simplex is oriented by increasing node index. The
//! boundary matrices follow the alternating-sum convention
//! `∂[i,j] = [j] − [i]` and `∂[i,j,k] = [j,k] − [i,k] + [i,j]`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::numerical_rank;
use crate::scalar::Real;
use crate::sparse::CscMatrix;

/// Raw directed weighted network for one region and year.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowNetwork {
    region: String,
    year: i32,
    nodes: BTreeSet<String>,
    /// Merged arc weights keyed by `(from, to)`.
    arcs: BTreeMap<(String, String), f64>,
}

impl FlowNetwork {
    /// Build a network from `(from, to, weight)` arcs. Duplicate arcs are
    /// summed. Self-arcs and negative or non-finite weights are rejected.
    pub fn new<I, S>(region: impl Into<String>, year: i32, arcs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S, f64)>,
        S: Into<String>,
    {
        let mut net = Self {
            region: region.into(),
            year,
            nodes: BTreeSet::new(),
            arcs: BTreeMap::new(),
        };
        for (from, to, weight) in arcs {
            net.add_arc(from.into(), to.into(), weight)?;
        }
        Ok(net)
    }

    fn add_arc(&mut self, from: String, to: String, weight: f64) -> Result<()> {
        if from == to {
            return Err(Error::SelfArc(from));
        }
        if !(weight >= 0.0) || !weight.is_finite() {
            return Err(Error::NegativeWeight { from, to, weight });
        }
        self.nodes.insert(from.clone());
        self.nodes.insert(to.clone());
        *self.arcs.entry((from, to)).or_insert(0.0) += weight;
        Ok(())
    }

    /// Add nodes that may carry no arcs.
    pub fn with_nodes<S: Into<String>>(mut self, nodes: impl IntoIterator<Item = S>) -> Self {
        self.nodes.extend(nodes.into_iter().map(Into::into));
        self
    }

    pub fn region(&self) -> &str {
        &self.region
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(String::as_str)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn arcs(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        self.arcs.iter().map(|((f, t), &w)| (f.as_str(), t.as_str(), w))
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// Copy of the network with every arc reversed.
    pub fn reversed(&self) -> Self {
        let arcs = self
            .arcs
            .iter()
            .map(|((f, t), &w)| ((t.clone(), f.clone()), w))
            .collect();
        Self {
            region: self.region.clone(),
            year: self.year,
            nodes: self.nodes.clone(),
            arcs,
        }
    }
}

/// Strict total order on node ids used to orient simplices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum NodeOrder {
    #[default]
    Lexicographic,
    /// Explicit ranking; must contain every node of the network.
    Custom(Vec<String>),
}

/// Oriented edges `(i, j)` with `i < j` over densely indexed nodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSupport {
    pub node_ids: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

/// One net flow per oriented edge; negative values run against orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFlow<T> {
    pub values: Vec<T>,
}

impl<T: Real> EdgeFlow<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn zeros(n1: usize) -> Self {
        Self {
            values: vec![T::zero(); n1],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }

    pub fn sum(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn norm(&self) -> T {
        crate::linalg::norm(&self.values)
    }

    pub fn scaled(&self, alpha: T) -> Self {
        Self::new(self.values.iter().map(|&v| alpha * v).collect())
    }

    pub fn check_len(&self, complex: &OrientedComplex) -> Result<()> {
        if self.len() != complex.n1() {
            return Err(Error::DimensionMismatch {
                what: "edge flow length",
                expected: complex.n1(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

impl<T> std::ops::Index<usize> for EdgeFlow<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

/// Antisymmetrize a directed network into net flows on oriented edges.
///
/// For every unordered pair with positive total weight, the edge is oriented
/// from the earlier node to the later one and carries `w(i→j) − w(j→i)`.
/// Pairs whose weights cancel stay in the support with flow zero.
pub fn antisymmetrize<T: Real>(
    network: &FlowNetwork,
    order: &NodeOrder,
) -> Result<(EdgeSupport, EdgeFlow<T>)> {
    let node_ids: Vec<String> = match order {
        NodeOrder::Lexicographic => network.nodes.iter().cloned().collect(),
        NodeOrder::Custom(rank) => {
            let known: BTreeSet<&String> = rank.iter().collect();
            if known.len() != rank.len() {
                return Err(Error::InvalidArgument(
                    "node order lists a node more than once".into(),
                ));
            }
            if let Some(missing) = network.nodes.iter().find(|n| !known.contains(n)) {
                return Err(Error::UnknownNode(missing.clone()));
            }
            rank.iter()
                .filter(|n| network.nodes.contains(*n))
                .cloned()
                .collect()
        }
    };
    let index: HashMap<&str, usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();

    let mut pairs: BTreeMap<(usize, usize), (f64, f64)> = BTreeMap::new();
    for (from, to, w) in network.arcs() {
        let a = index[from];
        let b = index[to];
        let (lo, hi, forward) = if a < b { (a, b, true) } else { (b, a, false) };
        let slot = pairs.entry((lo, hi)).or_insert((0.0, 0.0));
        if forward {
            slot.0 += w;
        } else {
            slot.1 += w;
        }
    }
    let mut edges = Vec::with_capacity(pairs.len());
    let mut values = Vec::with_capacity(pairs.len());
    for ((i, j), (fwd, back)) in pairs {
        if fwd + back > 0.0 {
            edges.push((i, j));
            values.push(T::lit(fwd - back));
        }
    }
    Ok((EdgeSupport { node_ids, edges }, EdgeFlow::new(values)))
}

/// Vertices, oriented edges and oriented triangles of a clique complex with
/// its two boundary matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedComplex {
    node_ids: Vec<String>,
    edges: Vec<(usize, usize)>,
    triangles: Vec<(usize, usize, usize)>,
    b1: CscMatrix<i32>,
    b2: CscMatrix<i32>,
}

impl OrientedComplex {
    pub fn n0(&self) -> usize {
        self.node_ids.len()
    }

    pub fn n1(&self) -> usize {
        self.edges.len()
    }

    pub fn n2(&self) -> usize {
        self.triangles.len()
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn triangles(&self) -> &[(usize, usize, usize)] {
        &self.triangles
    }

    /// Node-to-edge boundary, `n0 × n1`.
    pub fn b1(&self) -> &CscMatrix<i32> {
        &self.b1
    }

    /// Edge-to-triangle boundary, `n1 × n2`.
    pub fn b2(&self) -> &CscMatrix<i32> {
        &self.b2
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.edges.binary_search(&key).ok()
    }

    /// Number of triangles incident to each edge.
    pub fn edge_triangle_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n1()];
        for (e, _, _) in self.b2.triplets() {
            deg[e] += 1;
        }
        deg
    }

    pub fn edge_endpoints(&self, e: usize) -> (&str, &str) {
        let (i, j) = self.edges[e];
        (&self.node_ids[i], &self.node_ids[j])
    }
}

/// Fill every 3-clique of the undirected edge support.
pub fn build_clique_complex(support: &EdgeSupport) -> Result<OrientedComplex> {
    let n0 = support.node_ids.len();
    let mut edges = support.edges.clone();
    for &(i, j) in &edges {
        if i >= j {
            return Err(Error::MalformedComplex(format!(
                "edge ({i},{j}) is not oriented by increasing index"
            )));
        }
        if j >= n0 {
            return Err(Error::MalformedComplex(format!(
                "edge ({i},{j}) references node {j} of {n0}"
            )));
        }
    }
    edges.sort_unstable();
    if edges.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::MalformedComplex("duplicate edge".into()));
    }
    if edges != support.edges {
        return Err(Error::MalformedComplex(
            "edges must be listed in increasing (i, j) order".into(),
        ));
    }

    // forward adjacency, sorted
    let mut up: Vec<Vec<usize>> = vec![Vec::new(); n0];
    for &(i, j) in &edges {
        up[i].push(j);
    }
    let mut triangles = Vec::new();
    for i in 0..n0 {
        for (a, &j) in up[i].iter().enumerate() {
            // k > j adjacent to both i and j
            let tail = &up[i][a + 1..];
            let (mut p, mut q) = (0, 0);
            let uj = &up[j];
            while p < tail.len() && q < uj.len() {
                match tail[p].cmp(&uj[q]) {
                    std::cmp::Ordering::Less => p += 1,
                    std::cmp::Ordering::Greater => q += 1,
                    std::cmp::Ordering::Equal => {
                        triangles.push((i, j, tail[p]));
                        p += 1;
                        q += 1;
                    }
                }
            }
        }
    }

    let mut b1_trip = Vec::with_capacity(2 * edges.len());
    for (e, &(i, j)) in edges.iter().enumerate() {
        b1_trip.push((i, e, -1));
        b1_trip.push((j, e, 1));
    }
    let b1 = CscMatrix::from_triplets(n0, edges.len(), &b1_trip);

    let lookup = |a: usize, b: usize| edges.binary_search(&(a, b)).expect("face edge present");
    let mut b2_trip = Vec::with_capacity(3 * triangles.len());
    for (t, &(i, j, k)) in triangles.iter().enumerate() {
        b2_trip.push((lookup(i, j), t, 1));
        b2_trip.push((lookup(i, k), t, -1));
        b2_trip.push((lookup(j, k), t, 1));
    }
    let b2 = CscMatrix::from_triplets(edges.len(), triangles.len(), &b2_trip);

    Ok(OrientedComplex {
        node_ids: support.node_ids.clone(),
        edges,
        triangles,
        b1,
        b2,
    })
}

/// Convenience: antisymmetrize and fill cliques in one step.
pub fn complex_from_network<T: Real>(
    network: &FlowNetwork,
    order: &NodeOrder,
) -> Result<(OrientedComplex, EdgeFlow<T>)> {
    let (support, flow) = antisymmetrize(network, order)?;
    Ok((build_clique_complex(&support)?, flow))
}

/// Complex on nodes `0..n` named by their decimal index.
pub fn complex_from_edges(n0: usize, edges: &[(usize, usize)]) -> Result<OrientedComplex> {
    let mut oriented: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(a, b)| if a < b { (a, b) } else { (b, a) })
        .collect();
    oriented.sort_unstable();
    oriented.dedup();
    if oriented.iter().any(|&(a, b)| a == b) {
        return Err(Error::MalformedComplex("self loop".into()));
    }
    build_clique_complex(&EdgeSupport {
        node_ids: (0..n0).map(|i| i.to_string()).collect(),
        edges: oriented,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BettiNumbers {
    pub beta0: usize,
    pub beta1: usize,
}

/// Betti numbers by rank–nullity on the boundary matrices.
///
/// `tolerance` is an absolute singular-value threshold; `None` uses
/// `max(rows, cols) · ε · σ_max` per matrix.
pub fn betti(complex: &OrientedComplex, tolerance: Option<f64>) -> Result<BettiNumbers> {
    let rank_b1 = if complex.n1() == 0 {
        0
    } else {
        numerical_rank(&complex.b1.cast::<f64>().to_dense(), tolerance)?
    };
    let rank_b2 = if complex.n2() == 0 {
        0
    } else {
        numerical_rank(&complex.b2.cast::<f64>().to_dense(), tolerance)?
    };
    Ok(BettiNumbers {
        beta0: complex.n0() - rank_b1,
        beta1: complex.n1() - rank_b1 - rank_b2,
    })
}

/// Size and topology summary of one complex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComplexSummary {
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
    pub betti: BettiNumbers,
}

impl ComplexSummary {
    pub fn new(complex: &OrientedComplex, tolerance: Option<f64>) -> Result<Self> {
        Ok(Self {
            n0: complex.n0(),
            n1: complex.n1(),
            n2: complex.n2(),
            betti: betti(complex, tolerance)?,
        })
    }
}

impl fmt::Display for ComplexSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "n0 {}", self.n0)?;
        writeln!(f, "n1 {}", self.n1)?;
        writeln!(f, "n2 {}", self.n2)?;
        writeln!(f, "beta0 {}", self.betti.beta0)?;
        write!(f, "beta1 {}", self.betti.beta1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(arcs: &[(&str, &str, f64)]) -> FlowNetwork {
        FlowNetwork::new("r", 2017, arcs.iter().map(|&(a, b, w)| (a, b, w))).unwrap()
    }

    #[test]
    fn net_flow_of_opposing_arcs() {
        let (support, flow) = antisymmetrize::<f64>(&net(&[("A", "B", 12.0), ("B", "A", 4.0)]), &NodeOrder::Lexicographic).unwrap();
        assert_eq!(support.edges, vec![(0, 1)]);
        assert_eq!(flow.values, vec![8.0]);
    }

    #[test]
    fn one_sided_arc() {
        let (_, flow) = antisymmetrize::<f64>(&net(&[("A", "B", 5.0)]), &NodeOrder::Lexicographic).unwrap();
        assert_eq!(flow.values, vec![5.0]);
    }

    #[test]
    fn symmetric_cancellation_keeps_edge() {
        let (support, flow) = antisymmetrize::<f64>(&net(&[("A", "B", 3.0), ("B", "A", 3.0)]), &NodeOrder::Lexicographic).unwrap();
        assert_eq!(support.edges.len(), 1);
        assert_eq!(flow.values, vec![0.0]);
    }

    #[test]
    fn against_orientation_is_negative() {
        let (_, flow) = antisymmetrize::<f64>(&net(&[("B", "A", 2.0)]), &NodeOrder::Lexicographic).unwrap();
        assert_eq!(flow.values, vec![-2.0]);
    }

    #[test]
    fn duplicates_are_merged() {
        let n = net(&[("A", "B", 1.0), ("A", "B", 2.5)]);
        assert_eq!(n.arc_count(), 1);
        assert_eq!(n.arcs().next().unwrap().2, 3.5);
    }

    #[test]
    fn self_arc_and_negative_weight_rejected() {
        assert!(matches!(FlowNetwork::new("r", 1, [("A", "A", 1.0)]), Err(Error::SelfArc(_))));
        assert!(matches!(
            FlowNetwork::new("r", 1, [("A", "B", -1.0)]),
            Err(Error::NegativeWeight { .. })
        ));
    }

    #[test]
    fn custom_order_orients_edges() {
        let order = NodeOrder::Custom(vec!["B".into(), "A".into()]);
        let (support, flow) = antisymmetrize::<f64>(&net(&[("A", "B", 12.0), ("B", "A", 4.0)]), &order).unwrap();
        assert_eq!(support.node_ids, vec!["B", "A"]);
        assert_eq!(flow.values, vec![-8.0]);
    }

    #[test]
    fn unknown_node_in_custom_order() {
        let order = NodeOrder::Custom(vec!["A".into()]);
        match antisymmetrize::<f64>(&net(&[("A", "B", 1.0)]), &order) {
            Err(Error::UnknownNode(id)) => assert_eq!(id, "B"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn k3_boundary() {
        let c = complex_from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!((c.n1(), c.n2()), (3, 1));
        let col: Vec<_> = c.b2().column(0).collect();
        assert_eq!(col, vec![(0, 1), (1, -1), (2, 1)]);
        let b1 = c.b1();
        assert_eq!(b1.get(0, 0), -1);
        assert_eq!(b1.get(1, 0), 1);
    }

    #[test]
    fn four_cycle_and_k4_counts() {
        let c4 = complex_from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!((c4.n1(), c4.n2()), (4, 0));
        let k4 = complex_from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!((k4.n1(), k4.n2()), (6, 4));
        assert_eq!(k4.b1().matmul(k4.b2()).nnz(), 0);
    }

    #[test]
    fn betti_examples() {
        let c4 = complex_from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(betti(&c4, None).unwrap(), BettiNumbers { beta0: 1, beta1: 1 });
        let k3 = complex_from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        assert_eq!(betti(&k3, None).unwrap(), BettiNumbers { beta0: 1, beta1: 0 });
        let two = complex_from_edges(8, &[(0, 1), (1, 2), (2, 3), (0, 3), (4, 5), (5, 6), (6, 7), (4, 7)]).unwrap();
        assert_eq!(betti(&two, None).unwrap(), BettiNumbers { beta0: 2, beta1: 2 });
    }

    #[test]
    fn malformed_support_rejected() {
        let bad = EdgeSupport {
            node_ids: vec!["a".into(), "b".into()],
            edges: vec![(1, 0)],
        };
        assert!(build_clique_complex(&bad).is_err());
    }

    #[test]
    fn summary_report() {
        let c4 = complex_from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let s = ComplexSummary::new(&c4, None).unwrap().to_string();
        assert_eq!(s, "n0 4\nn1 4\nn2 0\nbeta0 1\nbeta1 1");
    }
}
