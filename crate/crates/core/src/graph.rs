//! k-nearest-neighbor structure and the reconstruction weight matrix `W`.
//!
//! Column `j` of `W` holds the weights with which the neighbors of row `j`
//! reconstruct it: `W[(i, j)] > 0` only for `i` in the neighbor list of `j`,
//! and every column sums to one.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{dot, solve_simplex_box_qp, sq_dist, Matrix, SimplexBoxQp};
use crate::error::PlcError;

/// Ridge added to each column Gram matrix; duplicate neighbors make it
/// singular.
pub const GRAM_RIDGE: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct NeighborSet {
    k: usize,
    neighbors: Vec<Vec<usize>>,
}

impl NeighborSet {
    /// Validates that every list has exactly `k` distinct entries in range,
    /// none equal to its own index.
    pub fn new(k: usize, neighbors: Vec<Vec<usize>>) -> Result<Self, PlcError> {
        let n = neighbors.len();
        for (j, list) in neighbors.iter().enumerate() {
            if list.len() != k {
                return Err(PlcError::Input(format!("row {j} has {} neighbors, expected {k}", list.len())));
            }
            let mut seen = list.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != k || seen.iter().any(|&i| i >= n || i == j) {
                return Err(PlcError::Input(format!("invalid neighbor list for row {j}")));
            }
        }
        Ok(Self { k, neighbors })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    /// Neighbors of row `j`, nearest first.
    pub fn of(&self, j: usize) -> &[usize] {
        &self.neighbors[j]
    }

    pub fn contains(&self, j: usize, i: usize) -> bool {
        self.neighbors[j].contains(&i)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightGraph {
    neighbors: NeighborSet,
    weights: Matrix,
}

impl WeightGraph {
    pub fn neighbors(&self) -> &NeighborSet {
        &self.neighbors
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn into_weights(self) -> Matrix {
        self.weights
    }

    /// `(W + Wᵀ) / 2`.
    pub fn symmetrized(&self) -> Matrix {
        self.weights.symmetrized()
    }
}

/// Degree matrix `A` (row sums of `W`, kept as its diagonal) and `L = A − W`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaplacianPair {
    pub degrees: Vec<f64>,
    pub l: Matrix,
}

impl LaplacianPair {
    pub fn a(&self) -> Matrix {
        Matrix::from_diagonal(&self.degrees)
    }
}

/// `k` nearest rows of every row by Euclidean distance, ties to the lower
/// index.
pub fn build_knn(x: &Matrix, k: usize) -> Result<NeighborSet, PlcError> {
    let n = x.rows();
    if k == 0 || k >= n {
        return Err(PlcError::Input(format!("k = {k} must lie in 1..{n}")));
    }
    if let Some((row, col)) = x.first_non_finite() {
        return Err(PlcError::NonFinite { what: "features", row, col });
    }
    let mut neighbors = Vec::with_capacity(n);
    let mut dists: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for j in 0..n {
        dists.clear();
        dists.extend((0..n).filter(|&i| i != j).map(|i| (sq_dist(x.row(i), x.row(j)), i)));
        let order = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dists.len() {
            dists.select_nth_unstable_by(k - 1, order);
            dists.truncate(k);
        }
        dists.sort_unstable_by(order);
        neighbors.push(dists.iter().map(|&(_, i)| i).collect());
    }
    Ok(NeighborSet { k, neighbors })
}

/// Least-squares reconstruction weights from features alone.
pub fn init_weights(x: &Matrix, neighbors: &NeighborSet) -> Result<WeightGraph, PlcError> {
    solve_columns(x, None, None, neighbors, 0.0, 0.0)
}

/// Reconstruction weights coupled to the label confidences `f` and the
/// propagation matrices `s`, `d`. Column `j` minimizes
/// `ŵᵀ(Gˣ + Gᶠ)ŵ + (αH·ⱼ + βK·ⱼ)ᵀŵ` over the capped simplex, where
/// `H_aj = ‖D·N(a) − D·j‖²` and `K_aj = ‖S·N(a) − S·j‖²`.
pub fn update_weights(
    x: &Matrix,
    f: &Matrix,
    s: &Matrix,
    d: &Matrix,
    neighbors: &NeighborSet,
    alpha: f64,
    beta: f64,
) -> Result<WeightGraph, PlcError> {
    solve_columns(x, Some(f), Some((s, d)), neighbors, alpha, beta)
}

/// General column solve: the label term and the propagation terms are each
/// optional.
pub fn update_weights_with(
    x: &Matrix,
    f: Option<&Matrix>,
    sd: Option<(&Matrix, &Matrix)>,
    neighbors: &NeighborSet,
    alpha: f64,
    beta: f64,
) -> Result<WeightGraph, PlcError> {
    solve_columns(x, f, sd, neighbors, alpha, beta)
}

fn check_shapes(x: &Matrix, f: Option<&Matrix>, sd: Option<(&Matrix, &Matrix)>, neighbors: &NeighborSet) -> Result<(), PlcError> {
    let n = x.rows();
    if neighbors.len() != n {
        return Err(PlcError::Input(format!("{} neighbor lists for {n} rows", neighbors.len())));
    }
    if let Some(f) = f {
        if f.rows() != n {
            return Err(PlcError::Input(format!("confidence matrix has {} rows, expected {n}", f.rows())));
        }
    }
    if let Some((s, d)) = sd {
        if s.shape() != (n, n) || d.shape() != (n, n) {
            return Err(PlcError::Input(format!("S and D must be {n}x{n}")));
        }
    }
    Ok(())
}

fn solve_columns(
    x: &Matrix,
    f: Option<&Matrix>,
    sd: Option<(&Matrix, &Matrix)>,
    neighbors: &NeighborSet,
    alpha: f64,
    beta: f64,
) -> Result<WeightGraph, PlcError> {
    check_shapes(x, f, sd, neighbors)?;
    let n = x.rows();
    let k = neighbors.k();
    // Columns of S and D as contiguous rows.
    let sd_t = sd.map(|(s, d)| (s.transpose(), d.transpose()));

    let mut weights = Matrix::zeros(n, n);
    for j in 0..n {
        let nb = neighbors.of(j);
        let mut gram = column_gram(x, j, nb);
        if let Some(f) = f {
            let gf = column_gram(f, j, nb);
            gram = gram.add(&gf);
        }
        for a in 0..k {
            gram[(a, a)] += GRAM_RIDGE;
        }
        let linear: Vec<f64> = match &sd_t {
            Some((st, dt)) => nb
                .iter()
                .map(|&i| alpha * sq_dist(dt.row(i), dt.row(j)) + beta * sq_dist(st.row(i), st.row(j)))
                .collect(),
            None => vec![0.0; k],
        };
        let problem = SimplexBoxQp::new(gram, linear, vec![1.0; k])?;
        let solution = solve_simplex_box_qp(&problem, crate::dense::qp::DEFAULT_TOL)?;
        for (&i, &w) in nb.iter().zip(&solution.weights) {
            weights[(i, j)] = w;
        }
    }
    Ok(WeightGraph { neighbors: neighbors.clone(), weights })
}

/// `G_ab = (v_j − v_N(a)) · (v_j − v_N(b))` over the rows of `v`.
fn column_gram(v: &Matrix, j: usize, nb: &[usize]) -> Matrix {
    let diffs: Vec<Vec<f64>> = nb.iter().map(|&i| v.row(j).iter().zip(v.row(i)).map(|(a, b)| a - b).collect()).collect();
    let k = nb.len();
    let mut g = Matrix::zeros(k, k);
    for a in 0..k {
        for b in a..k {
            let value = dot(&diffs[a], &diffs[b]);
            g[(a, b)] = value;
            g[(b, a)] = value;
        }
    }
    g
}

/// `A = diag(row sums of W)`, `L = A − W`.
pub fn laplacian(w: &Matrix) -> LaplacianPair {
    let degrees = w.row_sums();
    let mut l = w.scale(-1.0);
    for (i, &deg) in degrees.iter().enumerate() {
        l[(i, i)] += deg;
    }
    LaplacianPair { degrees, l }
}

/// Laplacian of the symmetrized graph: `W̃ = (W + Wᵀ)/2`, `Ã = diag(W̃ 1)`,
/// `L̃ = Ã − W̃`. Positive semidefinite, unlike `A − W` with row-sum degrees
/// when `W` is not symmetric. Used by the propagation step.
pub fn symmetric_laplacian(w: &Matrix) -> LaplacianPair {
    laplacian(&w.symmetrized())
}

/// `Σⱼ ‖vⱼ − Σᵢ wᵢⱼ vᵢ‖²` for the rows `v` of `values`.
pub fn reconstruction_error(w: &Matrix, values: &Matrix) -> f64 {
    let (n, q) = values.shape();
    let mut total = 0.0;
    let mut r = vec![0.0; q];
    for j in 0..n {
        r.copy_from_slice(values.row(j));
        for i in 0..n {
            let wij = w[(i, j)];
            if wij != 0.0 {
                for (rc, vc) in r.iter_mut().zip(values.row(i)) {
                    *rc -= wij * vc;
                }
            }
        }
        total += dot(&r, &r);
    }
    total
}

/// The quantity the column solves minimize, summed over columns:
/// feature and label reconstruction errors plus
/// `Σᵢⱼ Wᵢⱼ (α‖D·ᵢ − D·ⱼ‖² + β‖S·ᵢ − S·ⱼ‖²)`.
///
/// The label term is skipped when `f` is `None`, the propagation terms when
/// `sd` is `None`.
pub fn weight_subobjective(
    x: &Matrix,
    f: Option<&Matrix>,
    sd: Option<(&Matrix, &Matrix)>,
    w: &Matrix,
    alpha: f64,
    beta: f64,
) -> f64 {
    let mut total = reconstruction_error(w, x);
    if let Some(f) = f {
        total += reconstruction_error(w, f);
    }
    if let Some((s, d)) = sd {
        let (st, dt) = (s.transpose(), d.transpose());
        let n = w.rows();
        for i in 0..n {
            for j in 0..n {
                let wij = w[(i, j)];
                if wij != 0.0 {
                    total += wij * (alpha * sq_dist(dt.row(i), dt.row(j)) + beta * sq_dist(st.row(i), st.row(j)));
                }
            }
        }
    }
    total
}
