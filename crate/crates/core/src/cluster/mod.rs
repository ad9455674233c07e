//! Edge clusterings: harmonic coordinates, provider geography and health
//! system pairs, compared through adjusted mutual information.

pub mod ami;
pub mod kmeans;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Write;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::complex::OrientedComplex;
use crate::error::{Error, Result};
use crate::hodge::HarmonicBasis;
use crate::linalg::{lanczos_largest, symmetric_eigen, LanczosOptions};
use crate::scalar::Real;

pub use ami::ami_labels;
pub use kmeans::{kmeans, KMeansOptions, KMeansResult};

pub const DEFAULT_K: usize = 10;
/// Harmonic rows shorter than this are flagged weak.
pub const WEAK_ROW_NORM: f64 = 1e-10;
/// Affinity matrices up to this size use the dense eigensolver.
const DENSE_AFFINITY_CAP: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusterMethod {
    Harmonic,
    GeoKmeans,
    SystemPair,
    /// Labels supplied by the caller.
    External,
}

impl ClusterMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ClusterMethod::Harmonic => "harmonic",
            ClusterMethod::GeoKmeans => "geo-kmeans",
            ClusterMethod::SystemPair => "system-pair",
            ClusterMethod::External => "external",
        }
    }
}

/// Labels for a subset of a complex's edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeClustering {
    pub method: ClusterMethod,
    pub k: usize,
    /// Edge indices into the complex, increasing.
    pub edges: Vec<usize>,
    /// `labels[i] ∈ [0, k)` for `edges[i]`.
    pub labels: Vec<usize>,
    pub weak: Vec<bool>,
}

impl EdgeClustering {
    pub fn new(method: ClusterMethod, edges: Vec<usize>, labels: Vec<usize>) -> Result<Self> {
        if edges.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                what: "labels per edge",
                expected: edges.len(),
                got: labels.len(),
            });
        }
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        let weak = vec![false; edges.len()];
        Ok(Self {
            method,
            k,
            edges,
            labels,
            weak,
        })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn label_of(&self, edge: usize) -> Option<usize> {
        self.edges.binary_search(&edge).ok().map(|i| self.labels[i])
    }

    /// Delimited export: edge index, endpoint ids, label, method, weak flag.
    pub fn write_csv<W: Write>(&self, out: W, complex: &OrientedComplex) -> Result<()> {
        write_clusterings(out, complex, &[self])
    }
}

/// Several clusterings of one complex stacked into a single table.
pub fn write_clusterings<W: Write>(out: W, complex: &OrientedComplex, clusterings: &[&EdgeClustering]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["edge", "from_id", "to_id", "label", "method", "weak"])?;
    for c in clusterings {
        for ((&e, &l), &weak) in c.edges.iter().zip(&c.labels).zip(&c.weak) {
            let (a, b) = complex.edge_endpoints(e);
            w.write_record([
                e.to_string().as_str(),
                a,
                b,
                &l.to_string(),
                c.method.as_str(),
                if weak { "1" } else { "0" },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Labels keyed by unordered endpoint pair from a cluster table, keeping rows
/// whose `method` column equals `method` when given.
pub fn read_labels<R: std::io::Read>(input: R, method: Option<&str>) -> Result<BTreeMap<(String, String), usize>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (fi, ti, li) = (col("from_id")?, col("to_id")?, col("label")?);
    let mi = match method {
        Some(_) => Some(col("method")?),
        None => None,
    };
    let mut out = BTreeMap::new();
    for row in rdr.records() {
        let row = row?;
        if let (Some(m), Some(i)) = (method, mi) {
            if row.get(i) != Some(m) {
                continue;
            }
        }
        let a = row.get(fi).unwrap_or("").to_string();
        let b = row.get(ti).unwrap_or("").to_string();
        let label: usize = row.get(li).unwrap_or("").parse().map_err(|_| {
            Error::InvalidArgument(format!("label `{}` is not a non-negative integer", row.get(li).unwrap_or("")))
        })?;
        out.insert(if a <= b { (a, b) } else { (b, a) }, label);
    }
    Ok(out)
}

/// AMI between two keyed label tables over their common keys.
pub fn ami_keyed<K: Ord>(a: &BTreeMap<K, usize>, b: &BTreeMap<K, usize>) -> Result<(usize, f64)> {
    let (la, lb): (Vec<usize>, Vec<usize>) = a
        .iter()
        .filter_map(|(k, &x)| b.get(k).map(|&y| (x, y)))
        .unzip();
    if la.len() < 2 {
        return Err(Error::TooFewCommonEdges(la.len()));
    }
    Ok((la.len(), ami_labels(&la, &lb)?))
}

/// Edges left out of a clustering for lack of coordinates or system ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Coverage {
    pub total: usize,
    pub excluded: Vec<usize>,
}

impl Coverage {
    pub fn covered(&self) -> usize {
        self.total - self.excluded.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProviderGeo {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub system_id: Option<String>,
}

impl ProviderGeo {
    pub fn new(id: impl Into<String>, lat: f64, lon: f64, system_id: Option<String>) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidArgument(format!("coordinates ({lat}, {lon}) out of range")));
        }
        Ok(Self {
            id: id.into(),
            lat,
            lon,
            system_id,
        })
    }
}

/// Partition edges by their rows of the harmonic basis.
///
/// Rows are scaled to unit length, the affinity is the absolute cosine, and
/// the embedding is the top `k` eigenvectors of `D^{-1/2} A D^{-1/2}` with rows
/// normalized before k-means. Rows of norm below [`WEAK_ROW_NORM`] sit at the
/// origin of the embedding, go to the nearest centroid and are flagged weak.
pub fn harmonic_cluster<T: Real>(basis: &HarmonicBasis<T>, k: usize, seed: u64) -> Result<EdgeClustering> {
    if basis.dim() == 0 {
        return Err(Error::NoHarmonicStructure);
    }
    let rows = DMatrix::from_fn(basis.n_edges(), basis.dim(), |r, c| basis.vectors[(r, c)].as_f64());
    cluster_rows(&rows, k, seed)
}

/// Number of edges whose harmonic row reaches [`WEAK_ROW_NORM`].
pub fn harmonic_signal_edges<T: Real>(basis: &HarmonicBasis<T>) -> usize {
    (0..basis.n_edges())
        .filter(|&r| {
            let sq: f64 = basis.vectors.row(r).iter().map(|x| x.as_f64() * x.as_f64()).sum();
            sq.sqrt() >= WEAK_ROW_NORM
        })
        .count()
}

/// [`harmonic_cluster`] on an explicit coordinate matrix (one row per edge).
pub fn cluster_rows(rows: &DMatrix<f64>, k: usize, seed: u64) -> Result<EdgeClustering> {
    let (n, d) = rows.shape();
    if d == 0 {
        return Err(Error::NoHarmonicStructure);
    }
    let mut strong = Vec::new();
    let mut units: Vec<Vec<f64>> = Vec::new();
    for r in 0..n {
        let row: Vec<f64> = rows.row(r).iter().copied().collect();
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm >= WEAK_ROW_NORM {
            strong.push(r);
            units.push(row.into_iter().map(|x| x / norm).collect());
        }
    }
    let m = strong.len();
    if k == 0 || k > m {
        return Err(Error::InvalidArgument(format!(
            "k = {k} needs between 1 and {m} edges with harmonic signal"
        )));
    }
    let affinity = DMatrix::from_fn(m, m, |a, b| {
        units[a].iter().zip(&units[b]).map(|(x, y)| x * y).sum::<f64>().abs()
    });
    let deg: Vec<f64> = (0..m).map(|a| affinity.row(a).sum()).collect();
    let inv_sqrt: Vec<f64> = deg.iter().map(|&v| 1.0 / v.sqrt()).collect();
    let normalized = DMatrix::from_fn(m, m, |a, b| affinity[(a, b)] * inv_sqrt[a] * inv_sqrt[b]);
    let embedding = top_eigenvectors(&normalized, k, seed)?;
    let points: Vec<Vec<f64>> = (0..m)
        .map(|a| {
            let row: Vec<f64> = embedding.row(a).iter().copied().collect();
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.into_iter().map(|x| x / norm).collect()
            } else {
                row
            }
        })
        .collect();
    let km = kmeans(&points, &KMeansOptions::new(k, seed))?;

    let origin = vec![0.0; k];
    let weak_label = kmeans::nearest(&origin, &km.centroids).0;
    let mut labels = vec![weak_label; n];
    let mut weak = vec![true; n];
    for (i, &r) in strong.iter().enumerate() {
        labels[r] = km.labels[i];
        weak[r] = false;
    }
    Ok(EdgeClustering {
        method: ClusterMethod::Harmonic,
        k,
        edges: (0..n).collect(),
        labels,
        weak,
    })
}

fn top_eigenvectors(m: &DMatrix<f64>, k: usize, seed: u64) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n <= DENSE_AFFINITY_CAP {
        let eig = symmetric_eigen(m)?;
        Ok(eig.vectors.columns(n - k, k).into_owned())
    } else {
        let opts = LanczosOptions {
            seed,
            ..LanczosOptions::default()
        };
        let op = |x: &[f64]| (m * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec();
        Ok(lanczos_largest(op, n, k, &[], &opts)?.vectors)
    }
}

/// k-means on `(lat_i, lon_i, lat_j, lon_j)` in orientation order.
pub fn geo_kmeans(
    complex: &OrientedComplex,
    geo: &HashMap<String, ProviderGeo>,
    opts: &KMeansOptions,
) -> Result<(EdgeClustering, Coverage, KMeansResult)> {
    let mut coverage = Coverage {
        total: complex.n1(),
        excluded: Vec::new(),
    };
    let mut edges = Vec::new();
    let mut points = Vec::new();
    for e in 0..complex.n1() {
        let (a, b) = complex.edge_endpoints(e);
        match (geo.get(a), geo.get(b)) {
            (Some(ga), Some(gb)) => {
                edges.push(e);
                points.push(vec![ga.lat, ga.lon, gb.lat, gb.lon]);
            }
            _ => coverage.excluded.push(e),
        }
    }
    let km = kmeans(&points, opts)?;
    let clustering = EdgeClustering {
        method: ClusterMethod::GeoKmeans,
        k: opts.k,
        weak: vec![false; edges.len()],
        edges,
        labels: km.labels.clone(),
    };
    Ok((clustering, coverage, km))
}

/// One cluster per unordered pair of endpoint health systems.
pub fn system_pair_clusters(
    complex: &OrientedComplex,
    geo: &HashMap<String, ProviderGeo>,
) -> (EdgeClustering, Coverage) {
    let mut coverage = Coverage {
        total: complex.n1(),
        excluded: Vec::new(),
    };
    let mut edges = Vec::new();
    let mut pairs = Vec::new();
    for e in 0..complex.n1() {
        let (a, b) = complex.edge_endpoints(e);
        let sys = |id: &str| geo.get(id).and_then(|g| g.system_id.clone());
        match (sys(a), sys(b)) {
            (Some(x), Some(y)) => {
                edges.push(e);
                pairs.push(if x <= y { (x, y) } else { (y, x) });
            }
            _ => coverage.excluded.push(e),
        }
    }
    let distinct: BTreeSet<&(String, String)> = pairs.iter().collect();
    let index: BTreeMap<&(String, String), usize> = distinct.into_iter().enumerate().map(|(i, p)| (p, i)).collect();
    let labels: Vec<usize> = pairs.iter().map(|p| index[p]).collect();
    let clustering = EdgeClustering {
        method: ClusterMethod::SystemPair,
        k: index.len(),
        weak: vec![false; edges.len()],
        edges,
        labels,
    };
    (clustering, coverage)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmiReport {
    pub method_a: String,
    pub method_b: String,
    pub common_edges: usize,
    pub ami: f64,
}

/// AMI over the edges both clusterings label.
pub fn adjusted_mutual_information(a: &EdgeClustering, b: &EdgeClustering) -> Result<AmiReport> {
    let mut la = Vec::new();
    let mut lb = Vec::new();
    for (i, &e) in a.edges.iter().enumerate() {
        if let Some(l) = b.label_of(e) {
            la.push(a.labels[i]);
            lb.push(l);
        }
    }
    if la.len() < 2 {
        return Err(Error::TooFewCommonEdges(la.len()));
    }
    Ok(AmiReport {
        method_a: a.method.as_str().into(),
        method_b: b.method.as_str().into(),
        common_edges: la.len(),
        ami: ami_labels(&la, &lb)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::complex_from_edges;
    use crate::hodge::{harmonic_basis, HarmonicOptions, Mode};

    fn two_cycles() -> OrientedComplex {
        // cycles 0-1-2-3 and 4-5-6-7 joined by the path edge (3,4)
        complex_from_edges(
            8,
            &[(0, 1), (1, 2), (2, 3), (0, 3), (3, 4), (4, 5), (5, 6), (6, 7), (4, 7)],
        )
        .unwrap()
    }

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        let mut map = HashMap::new();
        let mut back = HashMap::new();
        a.iter().zip(b).all(|(x, y)| *map.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
    }

    #[test]
    fn cycles_separate() {
        let c = two_cycles();
        let hb = harmonic_basis::<f64>(&c, &HarmonicOptions::new(Mode::Normalized)).unwrap();
        let cl = harmonic_cluster(&hb, 2, 7).unwrap();
        let bridge = c.edge_index(3, 4).unwrap();
        assert!(cl.weak[bridge]);
        let first: Vec<usize> = [(0, 1), (1, 2), (2, 3), (0, 3)].iter().map(|&(i, j)| c.edge_index(i, j).unwrap()).collect();
        let second: Vec<usize> = [(4, 5), (5, 6), (6, 7), (4, 7)].iter().map(|&(i, j)| c.edge_index(i, j).unwrap()).collect();
        let l0 = cl.labels[first[0]];
        let l1 = cl.labels[second[0]];
        assert_ne!(l0, l1);
        assert!(first.iter().all(|&e| cl.labels[e] == l0));
        assert!(second.iter().all(|&e| cl.labels[e] == l1));
    }

    #[test]
    fn single_cluster() {
        let c = complex_from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let hb = harmonic_basis::<f64>(&c, &HarmonicOptions::new(Mode::Unnormalized)).unwrap();
        let cl = harmonic_cluster(&hb, 1, 0).unwrap();
        assert!(cl.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn duplicated_coordinates_do_not_change_partition() {
        let c = two_cycles();
        let hb = harmonic_basis::<f64>(&c, &HarmonicOptions::new(Mode::Unnormalized)).unwrap();
        let base = harmonic_cluster(&hb, 2, 3).unwrap();
        let doubled = DMatrix::from_fn(hb.n_edges(), 2 * hb.dim(), |r, col| hb.vectors[(r, col % hb.dim())]);
        let again = cluster_rows(&doubled, 2, 3).unwrap();
        assert!(same_partition(&base.labels, &again.labels));
    }

    #[test]
    fn no_harmonic_structure() {
        let k3 = complex_from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let hb = harmonic_basis::<f64>(&k3, &HarmonicOptions::new(Mode::Normalized)).unwrap();
        assert!(matches!(harmonic_cluster(&hb, 2, 0), Err(Error::NoHarmonicStructure)));
    }

    fn geo(id: &str, lat: f64, lon: f64, sys: Option<&str>) -> (String, ProviderGeo) {
        (id.to_string(), ProviderGeo::new(id, lat, lon, sys.map(String::from)).unwrap())
    }

    #[test]
    fn geo_single_point() {
        let c = complex_from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let g: HashMap<_, _> = (0..3).map(|i| geo(&i.to_string(), 45.0, -93.0, None)).collect();
        let (cl, cov, km) = geo_kmeans(&c, &g, &KMeansOptions::new(1, 0)).unwrap();
        assert_eq!(cl.labels, vec![0, 0]);
        assert_eq!(km.inertia, 0.0);
        assert!(cov.excluded.is_empty());
    }

    #[test]
    fn geo_coverage() {
        let c = complex_from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let g: HashMap<_, _> = (0..2).map(|i| geo(&i.to_string(), 45.0, -93.0 + i as f64, None)).collect();
        let (cl, cov, _) = geo_kmeans(&c, &g, &KMeansOptions::new(1, 0)).unwrap();
        assert_eq!(cl.edges, vec![0]);
        assert_eq!(cov.excluded, vec![1]);
        assert!(ProviderGeo::new("x", 91.0, 0.0, None).is_err());
    }

    #[test]
    fn system_pairs() {
        let c = complex_from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let g: HashMap<_, _> = [
            geo("0", 0.0, 0.0, Some("A")),
            geo("1", 0.0, 0.0, Some("A")),
            geo("2", 0.0, 0.0, Some("B")),
            geo("3", 0.0, 0.0, Some("B")),
        ]
        .into_iter()
        .collect();
        let (cl, cov) = system_pair_clusters(&c, &g);
        assert_eq!(cl.k, 3);
        assert!(cov.excluded.is_empty());
        // (1,2) is A-B and (0,3) is A-B read from the other side
        assert_eq!(cl.label_of(c.edge_index(1, 2).unwrap()), cl.label_of(c.edge_index(0, 3).unwrap()));
    }

    #[test]
    fn ami_uses_intersection() {
        let a = EdgeClustering::new(ClusterMethod::External, vec![0, 1, 2, 3], vec![0, 0, 1, 1]).unwrap();
        let b = EdgeClustering::new(ClusterMethod::External, vec![1, 2, 3, 4], vec![5, 6, 6, 6]).unwrap();
        let r = adjusted_mutual_information(&a, &b).unwrap();
        assert_eq!(r.common_edges, 3);
        let c = EdgeClustering::new(ClusterMethod::External, vec![3, 9], vec![0, 1]).unwrap();
        assert!(matches!(adjusted_mutual_information(&a, &c), Err(Error::TooFewCommonEdges(1))));
    }
}
