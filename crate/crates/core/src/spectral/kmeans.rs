//! Lloyd's algorithm with k-means++ seeding and independent restarts.

use nalgebra::{DMatrix, RowDVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::LabelVector;
use crate::error::{Error, Result};

pub const DEFAULT_RESTARTS: usize = 20;
const MAX_LLOYD_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    /// Assignments of the best restart, relabelled by first appearance.
    pub labels: LabelVector,
    /// Within-cluster sum of squares of the best restart.
    pub wcss: f64,
    /// WCSS of every restart, in restart order.
    pub restart_wcss: Vec<f64>,
}

fn sq_dist(points: &DMatrix<f64>, i: usize, center: &RowDVector<f64>) -> f64 {
    points
        .row(i)
        .iter()
        .zip(center.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

fn plus_plus(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> Vec<RowDVector<f64>> {
    let n = points.nrows();
    let mut centers = vec![points.row(rng.random_range(0..n)).into_owned()];
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            nearest
                .iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap_or(n - 1))
        } else {
            rng.random_range(0..n)
        };
        let c = points.row(pick).into_owned();
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points, i, &c));
        }
        centers.push(c);
    }
    centers
}

fn assign(points: &DMatrix<f64>, centers: &[RowDVector<f64>], labels: &mut [usize], dists: &mut [f64]) -> bool {
    let mut changed = false;
    for i in 0..points.nrows() {
        let (best, d) = centers
            .iter()
            .enumerate()
            .map(|(c, center)| (c, sq_dist(points, i, center)))
            .fold((0, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
        if labels[i] != best {
            labels[i] = best;
            changed = true;
        }
        dists[i] = d;
    }
    changed
}

fn lloyd(points: &DMatrix<f64>, k: usize, seed: u64) -> (Vec<usize>, f64) {
    let n = points.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus(points, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut dists = vec![0.0; n];
    assign(points, &centers, &mut labels, &mut dists);

    for _ in 0..MAX_LLOYD_ITERS {
        let mut sums = vec![RowDVector::zeros(points.ncols()); k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            sums[labels[i]] += points.row(i);
            counts[labels[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = &sums[c] / counts[c] as f64;
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..n)
                    .fold(0, |best, i| if dists[i] > dists[best] { i } else { best });
                centers[c] = points.row(far).into_owned();
                dists[far] = 0.0;
            }
        }
        if !assign(points, &centers, &mut labels, &mut dists) {
            break;
        }
    }
    (labels, dists.iter().sum())
}

/// Clusters the rows of `points` into `k` groups, keeping the restart with
/// the lowest WCSS (earliest on ties). Restart `r` is seeded with
/// `seed + r`, so the result is a pure function of the inputs.
pub fn kmeans(points: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansFit> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!("k = {k} must lie in 1..={n}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("k-means input has non-finite entries".into()));
    }
    let restarts = restarts.max(1);
    let runs: Vec<(Vec<usize>, f64)> = (0..restarts)
        .map(|r| lloyd(points, k, seed.wrapping_add(r as u64)))
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .fold(0, |best, (r, run)| if run.1 < runs[best].1 { r } else { best });
    Ok(KMeansFit {
        labels: LabelVector::canonical(&runs[best].0)?,
        wcss: runs[best].1,
        restart_wcss: runs.iter().map(|r| r.1).collect(),
    })
}
