//! Lloyd's k-means with k-means++ seeding and parallel restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansOptions {
    pub k: usize,
    pub seed: u64,
    /// Independent seedings; capped at [`MAX_RESTARTS`].
    pub restarts: usize,
    pub max_iter: usize,
}

pub const MAX_RESTARTS: usize = 100;

impl KMeansOptions {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            restarts: 10,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub history: Vec<f64>,
    pub restart: usize,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the closest centroid, lowest index on ties.
pub fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, cen) in centroids.iter().enumerate() {
        let d = sq_dist(point, cen);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

pub fn kmeans(points: &[Vec<f64>], opts: &KMeansOptions) -> Result<KMeansResult> {
    let n = points.len();
    if opts.k == 0 || opts.k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {} needs between 1 and {n} points",
            opts.k
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidArgument("points of unequal dimension".into()));
    }
    let restarts = opts.restarts.clamp(1, MAX_RESTARTS);
    let runs: Vec<KMeansResult> = (0..restarts)
        .into_par_iter()
        .map(|r| single_run(points, opts, r))
        .collect();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.inertia.total_cmp(&b.inertia).then(a.restart.cmp(&b.restart)))
        .expect("at least one restart");
    Ok(best)
}

fn single_run(points: &[Vec<f64>], opts: &KMeansOptions, restart: usize) -> KMeansResult {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(restart as u64);
    let mut centroids = plus_plus(points, opts.k, &mut rng);
    let n = points.len();
    let mut labels = vec![usize::MAX; n];
    let mut history = Vec::new();
    for _ in 0..opts.max_iter {
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (c, d) = nearest(p, &centroids);
            inertia += d;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed {
            break;
        }
        centroids = update(points, &labels, &centroids);
    }
    let inertia = *history.last().expect("one iteration");
    KMeansResult {
        labels,
        centroids,
        inertia,
        history,
        restart,
    }
}

/// Cluster means; an emptied cluster takes the point farthest from its own
/// centroid.
fn update(points: &[Vec<f64>], labels: &[usize], old: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = old.len();
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    let mut out: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &c)| s.into_iter().map(|v| v / c.max(1) as f64).collect())
        .collect();
    for c in 0..k {
        if counts[c] == 0 {
            let far = (0..points.len())
                .max_by(|&a, &b| {
                    sq_dist(&points[a], &out[labels[a]])
                        .total_cmp(&sq_dist(&points[b], &out[labels[b]]))
                        .then(b.cmp(&a))
                })
                .expect("non-empty");
            out[c] = points[far].clone();
        }
    }
    out
}

fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            while d2[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            (0..n).find(|i| !chosen.contains(i)).expect("k <= n")
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_blobs() {
        let pts: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                let off = if i < 5 { 0.0 } else { 100.0 };
                vec![off + i as f64 * 0.1, off]
            })
            .collect();
        let r = kmeans(&pts, &KMeansOptions::new(2, 3)).unwrap();
        assert!(r.labels[..5].iter().all(|&l| l == r.labels[0]));
        assert!(r.labels[5..].iter().all(|&l| l == r.labels[5]));
        assert_ne!(r.labels[0], r.labels[5]);
    }

    #[test]
    fn k_equals_n() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let r = kmeans(&pts, &KMeansOptions::new(6, 1)).unwrap();
        assert_eq!(r.inertia, 0.0);
        let mut l = r.labels.clone();
        l.sort();
        l.dedup();
        assert_eq!(l.len(), 6);
    }

    #[test]
    fn history_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Vec<f64>> = (0..200).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let r = kmeans(&pts, &KMeansOptions::new(7, 11)).unwrap();
        for w in r.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        assert_eq!(r, kmeans(&pts, &KMeansOptions::new(7, 11)).unwrap());
    }

    #[test]
    fn invalid_k() {
        assert!(kmeans(&[vec![0.0]], &KMeansOptions::new(2, 0)).is_err());
        assert!(kmeans(&[vec![0.0]], &KMeansOptions::new(0, 0)).is_err());
    }
}
