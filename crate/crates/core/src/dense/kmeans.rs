use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{sq_dist, Matrix};
use crate::error::PlcError;

pub const DEFAULT_RESTARTS: usize = 10;
pub const DEFAULT_MAX_ITERATIONS: usize = 300;

#[derive(Clone, Debug, PartialEq)]
pub struct KMeansResult {
    /// Cluster id per row, in `0..clusters`.
    pub assignment: Vec<usize>,
    pub centroids: Matrix,
    /// Within-cluster sum of squares of the returned assignment.
    pub cost: f64,
    /// Cost after each assignment step of the winning restart.
    pub trace: Vec<f64>,
}

/// Lloyd's k-means with k-means++ seeding, keeping the best of `restarts`
/// runs. Deterministic for a fixed seed.
pub fn kmeans(points: &Matrix, clusters: usize, seed: u64, restarts: usize) -> Result<KMeansResult, PlcError> {
    kmeans_with(points, clusters, seed, restarts, DEFAULT_MAX_ITERATIONS)
}

pub fn kmeans_with(
    points: &Matrix,
    clusters: usize,
    seed: u64,
    restarts: usize,
    max_iterations: usize,
) -> Result<KMeansResult, PlcError> {
    let n = points.rows();
    if clusters == 0 || clusters > n {
        return Err(PlcError::Input(alloc::format!("cannot form {clusters} clusters from {n} points")));
    }
    if restarts == 0 {
        return Err(PlcError::Input("kmeans needs at least one restart".into()));
    }
    if let Some((row, col)) = points.first_non_finite() {
        return Err(PlcError::NonFinite { what: "kmeans input", row, col });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..restarts {
        let run = lloyd(points, clusters, &mut rng, max_iterations);
        if best.as_ref().is_none_or(|b| run.cost < b.cost) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn seed_centroids(points: &Matrix, clusters: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let n = points.rows();
    let mut centroids = Matrix::zeros(clusters, points.cols());
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from_slice(points.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), centroids.row(0))).collect();
    for c in 1..clusters {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in nearest.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from_slice(points.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), centroids.row(c)));
        }
    }
    centroids
}

fn lloyd(points: &Matrix, clusters: usize, rng: &mut ChaCha8Rng, max_iterations: usize) -> KMeansResult {
    let n = points.rows();
    let d = points.cols();
    let mut centroids = seed_centroids(points, clusters, rng);
    let mut assignment = vec![usize::MAX; n];
    let mut trace = Vec::new();

    for _ in 0..max_iterations.max(1) {
        // assignment step, ties to the lowest cluster id
        let mut changed = false;
        let mut cost = 0.0;
        for i in 0..n {
            let (c, dist) = (0..clusters)
                .map(|c| (c, sq_dist(points.row(i), centroids.row(c))))
                .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
            cost += dist;
        }
        trace.push(cost);
        if !changed && trace.len() > 1 {
            break;
        }

        // update step
        let mut sums = Matrix::zeros(clusters, d);
        let mut counts = vec![0usize; clusters];
        for (i, &c) in assignment.iter().enumerate() {
            counts[c] += 1;
            for (s, x) in sums.row_mut(c).iter_mut().zip(points.row(i)) {
                *s += x;
            }
        }
        for c in 0..clusters {
            if counts[c] > 0 {
                let inv = 1.0 / counts[c] as f64;
                for (dst, s) in centroids.row_mut(c).iter_mut().zip(sums.row(c)) {
                    *dst = s * inv;
                }
            }
        }
        // An emptied cluster is re-seeded at the point farthest from its
        // own centroid; the next assignment step can only lower the cost.
        for c in 0..clusters {
            if counts[c] == 0 {
                let far = (0..n)
                    .map(|i| (i, sq_dist(points.row(i), centroids.row(assignment[i]))))
                    .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
                    .0;
                let row: Vec<f64> = points.row(far).to_vec();
                centroids.row_mut(c).copy_from_slice(&row);
            }
        }
    }

    let cost = (0..n).map(|i| sq_dist(points.row(i), centroids.row(assignment[i]))).sum::<f64>();
    let cost = cost.min(*trace.last().unwrap_or(&cost));
    KMeansResult { assignment, centroids, cost, trace }
}
