//! Synthetic supports and flows with known decomposition, and the dense
//! reference decomposition used to check the production solvers.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{EdgeFlow, EdgeSupport, OrientedComplex};
use crate::error::{Error, Result};
use crate::hodge::{
    harmonic_basis, image_generators, HarmonicOptions, HodgeDecomposition, Mode, SolverUsed,
};
use crate::ingest::{EdgeRecord, ProviderRecord};
use crate::linalg::HouseholderQr;
use crate::scalar::Real;

/// Largest edge count accepted by [`dense_oracle`].
pub const ORACLE_MAX_EDGES: usize = 2000;

/// A flow assembled from known gradient, curl and harmonic parts.
#[derive(Debug, Clone)]
pub struct PlantedFlow<T> {
    pub complex: OrientedComplex,
    pub flow: EdgeFlow<T>,
    pub gradient: EdgeFlow<T>,
    pub curl: EdgeFlow<T>,
    pub harmonic: EdgeFlow<T>,
    pub mode: Mode,
}

/// `f = G·p + C·w + H·c` where `G`, `C` generate the mode's gradient and curl
/// spaces and `H` is its harmonic basis.
pub fn plant<T: Real>(
    complex: &OrientedComplex,
    potential: &[T],
    curl_weights: &[T],
    harmonic_coeffs: Option<&[T]>,
    mode: Mode,
) -> Result<PlantedFlow<T>> {
    check_dim("node potential", complex.n0(), potential.len())?;
    check_dim("triangle weights", complex.n2(), curl_weights.len())?;
    let (grad_gen, curl_gen) = image_generators::<T>(complex, mode);
    let gradient = grad_gen.mul_vec(potential);
    let curl = curl_gen.mul_vec(curl_weights);
    let mut harmonic = vec![T::zero(); complex.n1()];
    if let Some(coeffs) = harmonic_coeffs {
        let basis = harmonic_basis::<T>(complex, &HarmonicOptions::new(mode))?;
        if basis.dim() == 0 {
            return Err(Error::InvalidArgument(
                "harmonic coefficients given but the complex has no harmonic space".into(),
            ));
        }
        check_dim("harmonic coefficients", basis.dim(), coeffs.len())?;
        for (c, &a) in coeffs.iter().enumerate() {
            for (e, h) in harmonic.iter_mut().enumerate() {
                *h += a * basis.vectors[(e, c)];
            }
        }
    }
    let flow = (0..complex.n1())
        .map(|e| gradient[e] + curl[e] + harmonic[e])
        .collect();
    Ok(PlantedFlow {
        complex: complex.clone(),
        flow: EdgeFlow::new(flow),
        gradient: EdgeFlow::new(gradient),
        curl: EdgeFlow::new(curl),
        harmonic: EdgeFlow::new(harmonic),
        mode,
    })
}

fn check_dim(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, got })
    }
}

/// Erdős–Rényi support on nodes `0..n` (named by decimal index).
pub fn random_support(n: usize, p: f64, seed: u64) -> Result<EdgeSupport> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!("edge probability {p} outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Ok(EdgeSupport {
        node_ids: (0..n).map(|i| i.to_string()).collect(),
        edges,
    })
}

/// Vector of `len` values drawn uniformly from `[-1, 1)`.
pub fn random_vector<T: Real>(len: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| T::lit(rng.random_range(-1.0..1.0))).collect()
}

/// Reference decomposition: orthonormal bases of both image spaces from a
/// column-pivoted Householder QR, then explicit projection `Q·Qᵀ·f`.
pub fn dense_oracle<T: Real>(
    flow: &EdgeFlow<T>,
    complex: &OrientedComplex,
    mode: Mode,
) -> Result<HodgeDecomposition<T>> {
    if complex.n1() > ORACLE_MAX_EDGES {
        return Err(Error::TooLarge {
            what: "dense oracle edge count",
            size: complex.n1(),
            cap: ORACLE_MAX_EDGES,
        });
    }
    flow.check_len(complex)?;
    let (grad_gen, curl_gen) = image_generators::<T>(complex, mode);
    let g = qr_projection(&grad_gen.to_dense(), flow.as_slice());
    let r = qr_projection(&curl_gen.to_dense(), flow.as_slice());
    Ok(HodgeDecomposition::from_parts(flow, g, r, mode, SolverUsed::DenseQr))
}

fn qr_projection<T: Real>(a: &DMatrix<T>, f: &[T]) -> Vec<T> {
    let (m, n) = a.shape();
    if n == 0 || m == 0 {
        return vec![T::zero(); m];
    }
    let qr = HouseholderQr::new(a, true);
    let rank = qr.rank(T::lit(m.max(n) as f64) * T::epsilon() * T::lit(16.0));
    let mut y = qr.apply_qt(f);
    for v in y.iter_mut().skip(rank) {
        *v = T::zero();
    }
    qr.apply_q(&y)
}

/// Arcs realizing `flow` as net flow on each oriented edge: a positive value
/// becomes an arc along the orientation, a negative one an arc against it,
/// and a zero a pair of unit arcs so the edge survives ingestion.
pub fn flow_to_edge_records(
    complex: &OrientedComplex,
    flow: &EdgeFlow<f64>,
    year: i32,
) -> Result<Vec<EdgeRecord>> {
    flow.check_len(complex)?;
    let mut out = Vec::with_capacity(complex.n1());
    for e in 0..complex.n1() {
        let (a, b) = complex.edge_endpoints(e);
        let f = flow[e];
        let mut push = |from: &str, to: &str, weight: f64| {
            out.push(EdgeRecord {
                from_id: from.to_string(),
                to_id: to.to_string(),
                weight,
                year,
            })
        };
        if f > 0.0 {
            push(a, b, f);
        } else if f < 0.0 {
            push(b, a, -f);
        } else {
            push(a, b, 1.0);
            push(b, a, 1.0);
        }
    }
    Ok(out)
}

/// Parameters of [`synthetic_dataset`].
#[derive(Debug, Clone)]
pub struct DatasetConfig {
    pub regions: usize,
    pub providers_per_region: usize,
    pub edge_probability: f64,
    pub years: Vec<i32>,
    pub systems_per_region: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            regions: 2,
            providers_per_region: 24,
            edge_probability: 0.18,
            years: vec![2017],
            systems_per_region: 3,
            seed: 1,
        }
    }
}

/// Provider table and edge list for several regions, each an Erdős–Rényi
/// referral network with integer patient counts in both directions.
pub fn synthetic_dataset(cfg: &DatasetConfig) -> Result<(Vec<ProviderRecord>, Vec<EdgeRecord>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut providers = Vec::new();
    let mut edges = Vec::new();
    for region in 0..cfg.regions {
        let region_id = format!("R{region:02}");
        let center = (44.0 + 2.0 * region as f64, -93.0 + 3.0 * region as f64);
        let ids: Vec<String> = (0..cfg.providers_per_region)
            .map(|i| format!("{region_id}P{i:04}"))
            .collect();
        for (i, id) in ids.iter().enumerate() {
            let lat = center.0 + rng.random_range(-0.5..0.5);
            let lon = center.1 + rng.random_range(-0.5..0.5);
            let system = if cfg.systems_per_region == 0 {
                None
            } else {
                Some(format!("{region_id}S{}", rng.random_range(0..cfg.systems_per_region)))
            };
            providers.push(ProviderRecord {
                id: id.clone(),
                address: format!("{} Main St, {region_id}", 100 + i),
                region_id: Some(region_id.clone()),
                lat: Some(round6(lat)),
                lon: Some(round6(lon)),
                system_id: system,
                taxonomy: "207Q00000X".into(),
                entity_type: "1".into(),
            });
        }
        for &year in &cfg.years {
            let support = random_support(
                cfg.providers_per_region,
                cfg.edge_probability,
                rng.random(),
            )?;
            for (i, j) in support.edges {
                let (fwd, back) = loop {
                    let a: u32 = rng.random_range(0..30);
                    let b: u32 = rng.random_range(0..30);
                    if a + b > 0 {
                        break (a, b);
                    }
                };
                for (from, to, w) in [(i, j, fwd), (j, i, back)] {
                    if w > 0 {
                        edges.push(EdgeRecord {
                            from_id: ids[from].clone(),
                            to_id: ids[to].clone(),
                            weight: w as f64,
                            year,
                        });
                    }
                }
            }
        }
    }
    Ok((providers, edges))
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}
