//! Lloyd's k-means with k-means++ seeding.

use ndarray::{Array2, ArrayView1, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{compact, ClusterMethod, PseudoLabeling};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub max_iters: usize,
    /// Independent k-means++ restarts; the lowest SSD wins.
    pub n_init: usize,
    /// Scale every row to unit L2 norm before clustering.
    pub normalize_rows: bool,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            max_iters: 100,
            n_init: 4,
            normalize_rows: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub assignment: Vec<usize>,
    pub centroids: Array2<f64>,
    pub ssd: f64,
    /// SSD after every assignment step; nonincreasing.
    pub ssd_history: Vec<f64>,
    pub iterations: usize,
}

#[inline]
fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Validates `k` against the row count.
pub(super) fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::Config(format!("k = {k} must be in 1..={n}")));
    }
    Ok(())
}

pub(super) fn prepare(data: &Array2<f64>, cfg: &KMeansConfig) -> Array2<f64> {
    let mut data = data.clone();
    if cfg.normalize_rows {
        for mut row in data.axis_iter_mut(Axis(0)) {
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                row /= norm;
            }
        }
    }
    data
}

/// Nearest centroid per row (ties to the lowest index) and its squared distance.
fn assign(data: &Array2<f64>, centroids: &Array2<f64>) -> (Vec<usize>, Vec<f64>) {
    (0..data.nrows())
        .into_par_iter()
        .map(|i| {
            let row = data.row(i);
            let mut best = (0, f64::INFINITY);
            for (c, centroid) in centroids.axis_iter(Axis(0)).enumerate() {
                let d = sq_dist(row, centroid);
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .unzip()
}

/// Extends `init` to `k` centroids by D² sampling over the rows of `data`.
/// With no initial centroids the first one is a uniformly drawn row.
pub(super) fn seed_centroids(data: &Array2<f64>, init: Option<&Array2<f64>>, k: usize, r: &mut Rng) -> Array2<f64> {
    let n = data.nrows();
    let mut centers: Vec<Vec<f64>> = match init {
        Some(c) => c.axis_iter(Axis(0)).map(|row| row.to_vec()).collect(),
        None => vec![data.row(rng::below(r, n)).to_vec()],
    };
    let mut taken = vec![false; n];
    let mut d2: Vec<f64> = data
        .axis_iter(Axis(0))
        .map(|row| {
            centers
                .iter()
                .map(|c| sq_dist(row, ArrayView1::from(c.as_slice())))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng::unit_f64(r) * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if d > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|&d| d > 0.0).expect("total > 0"))
        } else {
            // Every row coincides with a center; duplicates are harmless.
            (0..n).find(|&i| !taken[i]).unwrap_or(0)
        };
        taken[next] = true;
        let c = data.row(next);
        for (i, row) in data.axis_iter(Axis(0)).enumerate() {
            d2[i] = d2[i].min(sq_dist(row, c));
        }
        centers.push(c.to_vec());
    }
    let dim = data.ncols();
    Array2::from_shape_vec((centers.len(), dim), centers.into_iter().flatten().collect())
        .expect("centroid rows share the data width")
}

/// Lloyd iterations from the given initial centroids.
pub(super) fn lloyd(data: &Array2<f64>, mut centroids: Array2<f64>, max_iters: usize) -> KMeansFit {
    let (mut assignment, dists) = assign(data, &centroids);
    let mut ssd: f64 = dists.iter().sum();
    let mut history = vec![ssd];
    let mut iterations = 0;
    let k = centroids.nrows();
    let dim = data.ncols();
    while iterations < max_iters {
        iterations += 1;
        let mut sums = Array2::<f64>::zeros((k, dim));
        let mut counts = vec![0usize; k];
        for (row, &c) in data.axis_iter(Axis(0)).zip(&assignment) {
            let mut s = sums.row_mut(c);
            s += &row;
            counts[c] += 1;
        }
        // Point distances to their current centroid, for re-seeding empties.
        let mut own: Vec<f64> = data
            .axis_iter(Axis(0))
            .zip(&assignment)
            .map(|(row, &c)| sq_dist(row, centroids.row(c)))
            .collect();
        for c in 0..k {
            if counts[c] > 0 {
                let mut cent = centroids.row_mut(c);
                cent.assign(&sums.row(c));
                cent /= counts[c] as f64;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = own
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best })
                    .0;
                centroids.row_mut(c).assign(&data.row(far));
                own[far] = 0.0;
            }
        }
        let (next, dists) = assign(data, &centroids);
        ssd = dists.iter().sum();
        history.push(ssd);
        let stable = next == assignment;
        assignment = next;
        if stable {
            break;
        }
    }
    KMeansFit {
        assignment,
        centroids,
        ssd,
        ssd_history: history,
        iterations,
    }
}

/// Best of `cfg.n_init` (at least one) k-means++ runs drawn from `r`; ties
/// keep the earlier run.
pub(super) fn best_of_restarts(data: &Array2<f64>, k: usize, r: &mut Rng, cfg: &KMeansConfig) -> KMeansFit {
    let mut best: Option<KMeansFit> = None;
    for _ in 0..cfg.n_init.max(1) {
        let fit = lloyd(data, seed_centroids(data, None, k, r), cfg.max_iters);
        if best.as_ref().map_or(true, |b| fit.ssd < b.ssd) {
            best = Some(fit);
        }
    }
    best.expect("at least one restart")
}

/// Full fit with k-means++ seeding and restarts.
pub fn kmeans_with(data: &Array2<f64>, k: usize, seed: u64, cfg: &KMeansConfig) -> Result<KMeansFit> {
    check_k(k, data.nrows())?;
    let data = prepare(data, cfg);
    Ok(best_of_restarts(&data, k, &mut rng::rng(seed), cfg))
}

/// Clusters the rows of `data` into `k` groups; deterministic for a seed.
pub fn kmeans(data: &Array2<f64>, k: usize, seed: u64, max_iters: usize) -> Result<PseudoLabeling> {
    kmeans_labels(
        data,
        k,
        seed,
        &KMeansConfig {
            max_iters,
            ..Default::default()
        },
    )
}

/// [`kmeans_with`] reduced to a labeling with contiguous cluster ids.
pub fn kmeans_labels(data: &Array2<f64>, k: usize, seed: u64, cfg: &KMeansConfig) -> Result<PseudoLabeling> {
    Ok(labeling_from_fit(&kmeans_with(data, k, seed, cfg)?, seed))
}

pub(super) fn labeling_from_fit(fit: &KMeansFit, seed: u64) -> PseudoLabeling {
    let (labels, k) = compact(&fit.assignment);
    PseudoLabeling {
        labels,
        k,
        method: ClusterMethod::Kmeans,
        ssd_curve: None,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gaussian_blobs, triangle_centers};

    fn same_partition(a: &[usize], b: &[usize]) -> bool {
        let mut map = std::collections::HashMap::new();
        a.iter().zip(b).all(|(&x, &y)| *map.entry(x).or_insert(y) == y)
            && map.values().collect::<std::collections::HashSet<_>>().len() == map.len()
    }

    #[test]
    fn single_cluster_ssd_is_total_variance() {
        let (data, _) = gaussian_blobs(&triangle_centers(10.0), 20, 0.5, 3);
        let fit = kmeans_with(&data, 1, 0, &KMeansConfig::default()).unwrap();
        let mean = data.mean_axis(Axis(0)).unwrap();
        let total: f64 = data.axis_iter(Axis(0)).map(|r| sq_dist(r, mean.view())).sum();
        assert!((fit.ssd - total).abs() < 1e-9 * total);
        assert!(fit.assignment.iter().all(|&c| c == 0));
    }

    #[test]
    fn singleton_clusters_have_zero_ssd() {
        let (data, _) = gaussian_blobs(&triangle_centers(10.0), 5, 0.5, 3);
        let fit = kmeans_with(&data, 15, 2, &KMeansConfig::default()).unwrap();
        assert_eq!(fit.ssd, 0.0);
    }

    #[test]
    fn recovers_separated_blobs() {
        for seed in 0..5 {
            let (data, truth) = gaussian_blobs(&triangle_centers(10.0), 100, 0.1, seed);
            let p = kmeans(&data, 3, seed, 100).unwrap();
            assert_eq!(p.k, 3);
            assert!(same_partition(&p.labels, &truth), "seed {seed}");
        }
    }

    #[test]
    fn ssd_never_increases_across_iterations() {
        let (data, _) = gaussian_blobs(&triangle_centers(2.0), 60, 1.0, 9);
        for k in [2, 4, 7] {
            let fit = kmeans_with(&data, k, 1, &KMeansConfig::default()).unwrap();
            for w in fit.ssd_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-9, "{:?}", fit.ssd_history);
            }
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let (data, _) = gaussian_blobs(&triangle_centers(3.0), 30, 1.0, 1);
        let a = kmeans_with(&data, 4, 8, &KMeansConfig::default()).unwrap();
        let b = kmeans_with(&data, 4, 8, &KMeansConfig::default()).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.ssd.to_bits(), b.ssd.to_bits());
        assert!(matches!(kmeans(&data, 91, 0, 10), Err(Error::Config(_))));
        assert!(matches!(kmeans(&data, 0, 0, 10), Err(Error::Config(_))));
    }

    #[test]
    fn row_normalization_option() {
        let data = Array2::from_shape_vec((4, 2), vec![1.0, 0.0, 10.0, 0.0, 0.0, 1.0, 0.0, 7.0]).unwrap();
        let cfg = KMeansConfig {
            normalize_rows: true,
            ..Default::default()
        };
        let fit = kmeans_with(&data, 2, 0, &cfg).unwrap();
        assert_eq!(fit.ssd, 0.0);
        assert_eq!(fit.assignment[0], fit.assignment[1]);
        assert_ne!(fit.assignment[0], fit.assignment[2]);
    }
}
