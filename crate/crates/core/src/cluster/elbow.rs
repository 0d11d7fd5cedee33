//! Cluster-count selection on the SSD elbow.

use ndarray::Array2;
use rand::RngCore;

use super::kmeans::{best_of_restarts, check_k, labeling_from_fit, lloyd, prepare, seed_centroids};
use super::{KMeansConfig, KMeansFit, PseudoLabeling};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone)]
pub struct ElbowResult {
    pub best_k: usize,
    /// `(k, SSD)` for every candidate in ascending `k`; SSD is nonincreasing.
    pub curve: Vec<(usize, f64)>,
    pub labeling: PseudoLabeling,
}

/// Knee of a decreasing curve: the point farthest below the chord joining the
/// endpoints once both axes are min-max scaled to `[0, 1]`. Ties and flat
/// curves resolve to the first point.
pub fn knee_index(curve: &[(usize, f64)]) -> usize {
    if curve.len() < 3 {
        return 0;
    }
    let (k0, k1) = (curve[0].0 as f64, curve[curve.len() - 1].0 as f64);
    let lo = curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= f64::EPSILON * hi.abs().max(1.0) || k1 <= k0 {
        return 0;
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, &(k, ssd)) in curve.iter().enumerate() {
        let x = (k as f64 - k0) / (k1 - k0);
        let y = (ssd - lo) / (hi - lo);
        let gap = 1.0 - x - y;
        if gap > best.1 + 1e-12 {
            best = (i, gap);
        }
    }
    best.0
}

/// Runs k-means for every candidate `k` and keeps the one at the SSD knee.
///
/// Each `k` takes the lower-SSD fit of an independent k-means++ start and a
/// start warmed from the previous candidate's centroids. The warm start
/// can only lower the SSD, so the curve is nonincreasing in `k`.
pub fn elbow_select(data: &Array2<f64>, candidates: &[usize], seed: u64) -> Result<ElbowResult> {
    elbow_select_with(data, candidates, seed, &KMeansConfig::default())
}

pub fn elbow_select_with(
    data: &Array2<f64>,
    candidates: &[usize],
    seed: u64,
    cfg: &KMeansConfig,
) -> Result<ElbowResult> {
    let mut ks = candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.is_empty() {
        return Err(Error::Config("elbow sweep needs at least one candidate k".into()));
    }
    for &k in &ks {
        check_k(k, data.nrows())?;
    }
    let prepared = prepare(data, cfg);
    let mut fits: Vec<KMeansFit> = Vec::with_capacity(ks.len());
    for &k in &ks {
        let mut r = rng::rng(seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let run_seed = r.next_u64();
        let mut run_rng = rng::rng(run_seed);
        let fresh = best_of_restarts(&prepared, k, &mut run_rng, cfg);
        let fit = match fits.last() {
            Some(prev) => {
                let warm = lloyd(
                    &prepared,
                    seed_centroids(&prepared, Some(&prev.centroids), k, &mut r),
                    cfg.max_iters,
                );
                if warm.ssd < fresh.ssd {
                    warm
                } else {
                    fresh
                }
            }
            None => fresh,
        };
        fits.push(fit);
    }
    let curve: Vec<(usize, f64)> = ks.iter().zip(&fits).map(|(&k, f)| (k, f.ssd)).collect();
    let i = knee_index(&curve);
    let mut labeling = labeling_from_fit(&fits[i], seed);
    labeling.ssd_curve = Some(curve.clone());
    Ok(ElbowResult {
        best_k: ks[i],
        curve,
        labeling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gaussian_blobs, triangle_centers};

    #[test]
    fn knee_of_hand_curve() {
        let curve = [(1, 100.0), (2, 40.0), (3, 5.0), (5, 4.0), (8, 3.0), (10, 2.0)];
        assert_eq!(knee_index(&curve), 2);
    }

    #[test]
    fn flat_and_short_curves_pick_first() {
        assert_eq!(knee_index(&[(2, 5.0), (3, 5.0), (4, 5.0)]), 0);
        assert_eq!(knee_index(&[(2, 5.0), (3, 1.0)]), 0);
        assert_eq!(knee_index(&[]), 0);
    }

    #[test]
    fn three_blobs_give_three() {
        let (data, _) = gaussian_blobs(&triangle_centers(10.0), 100, 0.1, 4);
        let res = elbow_select(&data, &[1, 2, 3, 5, 8, 10], 4).unwrap();
        assert_eq!(res.best_k, 3);
        assert_eq!(res.labeling.k, 3);
        for w in res.curve.windows(2) {
            assert!(w[1].1 <= w[0].1);
        }
    }

    #[test]
    fn rejects_bad_candidates() {
        let (data, _) = gaussian_blobs(&triangle_centers(10.0), 2, 0.1, 4);
        assert!(elbow_select(&data, &[], 0).is_err());
        assert!(elbow_select(&data, &[2, 7], 0).is_err());
    }
}
