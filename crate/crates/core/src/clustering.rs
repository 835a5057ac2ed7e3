//! Spectral clustering on a learned graph, and the two baselines.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::kmeans::DEFAULT_RESTARTS;
use crate::dense::{eig_sym_smallest, kmeans, Matrix};
use crate::error::PlcError;
use crate::graph::{build_knn, init_weights};

/// Cluster id per row, 0-based.
pub type Assignment = Vec<usize>;

/// Degree substituted for isolated vertices.
pub const ISOLATED_DEGREE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralResult {
    pub assignment: Assignment,
    /// Smallest eigenvalues of the normalized Laplacian, ascending.
    pub eigenvalues: Vec<f64>,
    /// Vertices with zero degree.
    pub isolated: Vec<usize>,
}

/// Normalized spectral clustering: the `l` bottom eigenvectors of
/// `I − Deg^{-1/2} W Deg^{-1/2}`, rows scaled to unit length (zero rows stay
/// zero), then k-means.
pub fn spectral_cluster(w: &Matrix, l: usize, seed: u64) -> Result<SpectralResult, PlcError> {
    let n = w.rows();
    if !w.is_square() {
        return Err(PlcError::Input(format!("affinity matrix is {}x{}", w.rows(), w.cols())));
    }
    if let Some((row, col)) = w.first_non_finite() {
        return Err(PlcError::NonFinite { what: "affinity matrix", row, col });
    }
    if l == 0 || l > n {
        return Err(PlcError::Input(format!("cannot form {l} clusters from {n} points")));
    }
    let (asym, row, col) = w.max_asymmetry();
    if asym > 1e-8 {
        return Err(PlcError::Input(format!("affinity matrix not symmetric at ({row}, {col})")));
    }
    if let Some(p) = w.as_slice().iter().position(|&v| v < 0.0) {
        return Err(PlcError::Input(format!("negative affinity at ({}, {})", p / n, p % n)));
    }

    let mut degrees = w.row_sums();
    let mut isolated = Vec::new();
    for (i, d) in degrees.iter_mut().enumerate() {
        if *d <= 0.0 {
            isolated.push(i);
            *d = ISOLATED_DEGREE;
        }
    }
    if l == 1 {
        return Ok(SpectralResult { assignment: vec![0; n], eigenvalues: vec![0.0], isolated });
    }
    let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / libm::sqrt(*d)).collect();
    let lap = Matrix::from_fn(n, n, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - inv_sqrt[i] * w[(i, j)] * inv_sqrt[j]
    })
    .symmetrized();
    let (eigenvalues, mut embedding) = eig_sym_smallest(&lap, l)?;
    for i in 0..n {
        let row = embedding.row_mut(i);
        let norm = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
    }
    let assignment = kmeans(&embedding, l, seed, DEFAULT_RESTARTS)?.assignment;
    Ok(SpectralResult { assignment, eigenvalues, isolated })
}

/// k-means on the feature rows.
pub fn kmeans_baseline(x: &Matrix, l: usize, seed: u64) -> Result<Assignment, PlcError> {
    Ok(kmeans(x, l, seed, DEFAULT_RESTARTS)?.assignment)
}

/// Spectral clustering on the feature-only reconstruction graph.
pub fn sc_baseline(x: &Matrix, k: usize, l: usize, seed: u64) -> Result<Assignment, PlcError> {
    let neighbors = build_knn(x, k)?;
    let graph = init_weights(x, &neighbors)?;
    Ok(spectral_cluster(&graph.symmetrized(), l, seed)?.assignment)
}
