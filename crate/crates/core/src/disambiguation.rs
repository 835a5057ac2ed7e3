//! Label-confidence matrix `F` and its disambiguation over the graph.
//!
//! The confidences minimize `Σⱼ ‖fⱼ − Σᵢ wᵢⱼ fᵢ‖²`, a quadratic form in `F`
//! with matrix `T = (I − W)(I − W)ᵀ`. Rows are updated one at a time
//! (Gauss–Seidel), each row being a small capped-simplex QP whose box is the
//! row's candidate set.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{solve_simplex_box_qp_from, Matrix, SimplexBoxQp, SparsePattern};
use crate::error::PlcError;

/// Row-stochastic confidences supported on the candidate sets.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceMatrix {
    f: Matrix,
}

impl ConfidenceMatrix {
    /// Checks row sums (within 1e-8) and `0 ≤ F ≤ Y`.
    pub fn new(f: Matrix, candidates: &Matrix) -> Result<Self, PlcError> {
        if f.shape() != candidates.shape() {
            return Err(PlcError::Input(format!(
                "confidence {}x{} vs candidates {}x{}",
                f.rows(),
                f.cols(),
                candidates.rows(),
                candidates.cols()
            )));
        }
        for i in 0..f.rows() {
            let row = f.row(i);
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-8 {
                return Err(PlcError::Input(format!("confidence row {i} does not sum to 1")));
            }
            if row.iter().zip(candidates.row(i)).any(|(&v, &y)| !(v >= 0.0 && v <= y)) {
                return Err(PlcError::Input(format!("confidence row {i} leaves its candidate box")));
            }
        }
        Ok(Self { f })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.f
    }

    pub fn into_matrix(self) -> Matrix {
        self.f
    }
}

/// Uniform mass over each row's candidates.
pub fn init_confidence(candidates: &Matrix) -> Result<ConfidenceMatrix, PlcError> {
    let mut f = Matrix::zeros(candidates.rows(), candidates.cols());
    for i in 0..candidates.rows() {
        let row = candidates.row(i);
        let count = row.iter().filter(|&&y| y != 0.0).count();
        if count == 0 {
            return Err(PlcError::Input(format!("candidate row {i} is empty")));
        }
        let share = 1.0 / count as f64;
        for (dst, &y) in f.row_mut(i).iter_mut().zip(row) {
            if y != 0.0 {
                *dst = share;
            }
        }
    }
    Ok(ConfidenceMatrix { f })
}

/// One Gauss–Seidel sweep over the rows in index order. The objective
/// [`disambiguation_objective`] does not increase.
pub fn update_confidence(w: &Matrix, candidates: &Matrix, f: &ConfidenceMatrix) -> Result<ConfidenceMatrix, PlcError> {
    let n = w.rows();
    let q = candidates.cols();
    if !w.is_square() || candidates.rows() != n || f.f.shape() != candidates.shape() {
        return Err(PlcError::Input("update_confidence: shape mismatch".into()));
    }
    if let Some((row, col)) = w.first_non_finite() {
        return Err(PlcError::NonFinite { what: "weights", row, col });
    }
    let pattern = SparsePattern::of(w);
    let mut f = f.f.clone();

    // r_c = f_c − Σᵢ wᵢc fᵢ = Σᵢ aᵢc fᵢ with A = I − W.
    let mut residual = f.clone();
    for c in 0..n {
        for &(i, wic) in &pattern.by_col[c] {
            for l in 0..q {
                residual[(c, l)] -= wic * f[(i, l)];
            }
        }
    }

    let mut coupling: Vec<(usize, f64)> = Vec::new();
    let mut linear = vec![0.0; q];
    for j in 0..n {
        // nonzeros of row j of A
        coupling.clear();
        let wjj = w[(j, j)];
        coupling.push((j, 1.0 - wjj));
        coupling.extend(pattern.by_row[j].iter().filter(|&&(c, _)| c != j).map(|&(c, v)| (c, -v)));

        let t_jj: f64 = coupling.iter().map(|&(_, a)| a * a).sum();
        linear.fill(0.0);
        for &(c, a) in &coupling {
            for l in 0..q {
                linear[l] += 2.0 * a * (residual[(c, l)] - a * f[(j, l)]);
            }
        }
        let problem = SimplexBoxQp::new(Matrix::from_diagonal(&vec![t_jj; q]), linear.clone(), candidates.row(j).to_vec())?;
        let old: Vec<f64> = f.row(j).to_vec();
        let solution = solve_simplex_box_qp_from(&problem, &old, crate::dense::qp::DEFAULT_TOL)?;
        for &(c, a) in &coupling {
            for l in 0..q {
                residual[(c, l)] += a * (solution.weights[l] - old[l]);
            }
        }
        f.row_mut(j).copy_from_slice(&solution.weights);
    }
    Ok(ConfidenceMatrix { f })
}

/// `Σⱼ ‖fⱼ − Σᵢ wᵢⱼ fᵢ‖²`.
pub fn disambiguation_objective(w: &Matrix, f: &Matrix) -> f64 {
    crate::graph::reconstruction_error(w, f)
}

/// Per-row argmax, ties to the lowest label.
pub fn pseudo_labels(f: &Matrix) -> Vec<usize> {
    f.row_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (l, &v)| if v > best.1 { (l, v) } else { best })
                .0
        })
        .collect()
}
