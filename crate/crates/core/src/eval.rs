//! Clustering metrics and the disambiguation bound checker.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{eig_sym_smallest, Matrix};
use crate::error::PlcError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Scope {
    All,
    TestOnly,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricReport {
    pub acc: f64,
    pub nmi: f64,
    pub n_evaluated: usize,
    pub scope: Scope,
}

/// ACC and NMI over all rows, or over the rows where `mask` is false.
pub fn evaluate(pred: &[usize], truth: &[usize], test_of: Option<&[bool]>) -> Result<MetricReport, PlcError> {
    check_lengths(pred, truth)?;
    match test_of {
        None => Ok(MetricReport { acc: acc(pred, truth)?, nmi: nmi(pred, truth)?, n_evaluated: pred.len(), scope: Scope::All }),
        Some(train) => {
            if train.len() != pred.len() {
                return Err(PlcError::Input("mask length differs from predictions".into()));
            }
            let idx: Vec<usize> = (0..pred.len()).filter(|&i| !train[i]).collect();
            let p: Vec<usize> = idx.iter().map(|&i| pred[i]).collect();
            let t: Vec<usize> = idx.iter().map(|&i| truth[i]).collect();
            Ok(MetricReport { acc: acc(&p, &t)?, nmi: nmi(&p, &t)?, n_evaluated: idx.len(), scope: Scope::TestOnly })
        }
    }
}

fn check_lengths(pred: &[usize], truth: &[usize]) -> Result<(), PlcError> {
    if pred.len() != truth.len() {
        return Err(PlcError::Input(format!("{} predictions for {} labels", pred.len(), truth.len())));
    }
    if pred.is_empty() {
        return Err(PlcError::Input("no rows to evaluate".into()));
    }
    Ok(())
}

/// Relabels arbitrary ids to `0..m` in increasing order of id.
fn compress(ids: &[usize]) -> (Vec<usize>, usize) {
    let mut map = BTreeMap::new();
    for &id in ids {
        map.entry(id).or_insert(0);
    }
    for (rank, v) in map.values_mut().enumerate() {
        *v = rank;
    }
    (ids.iter().map(|id| map[id]).collect(), map.len())
}

fn contingency(pred: &[usize], truth: &[usize]) -> (Vec<Vec<u64>>, usize, usize) {
    let (p, np) = compress(pred);
    let (t, nt) = compress(truth);
    let mut table = vec![vec![0u64; nt]; np];
    for (&a, &b) in p.iter().zip(&t) {
        table[a][b] += 1;
    }
    (table, np, nt)
}

/// Fraction of rows matched under the best one-to-one map from clusters to
/// classes.
pub fn acc(pred: &[usize], truth: &[usize]) -> Result<f64, PlcError> {
    check_lengths(pred, truth)?;
    let (table, np, nt) = contingency(pred, truth);
    let size = np.max(nt);
    let max = table.iter().flatten().copied().max().unwrap_or(0) as i64;
    let cost: Vec<Vec<i64>> = (0..size)
        .map(|i| (0..size).map(|j| max - if i < np && j < nt { table[i][j] as i64 } else { 0 }).collect())
        .collect();
    let assignment = hungarian(&cost);
    let matched: u64 = assignment
        .iter()
        .enumerate()
        .filter(|&(i, &j)| i < np && j < nt)
        .map(|(i, &j)| table[i][j])
        .sum();
    Ok(matched as f64 / pred.len() as f64)
}

/// Minimum-cost perfect matching on a square matrix (potentials form of
/// the Hungarian method). Returns the column of each row.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based arrays with a virtual column 0
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![i64::MAX; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = i64::MAX;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            result[owner[j] - 1] = j - 1;
        }
    }
    result
}

/// `ln n − (1/n) Σ c ln c` over the counts, summed in sorted order.
fn entropy(counts: &mut [u64], n: f64) -> f64 {
    counts.sort_unstable();
    let s: f64 = counts.iter().filter(|&&c| c > 0).map(|&c| c as f64 * libm::log(c as f64)).sum();
    libm::log(n) - s / n
}

/// Mutual information over the geometric mean of the two entropies
/// (natural log). Zero when either partition is a single block.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64, PlcError> {
    check_lengths(pred, truth)?;
    let n = pred.len() as f64;
    let (table, _, _) = contingency(pred, truth);
    let mut rows: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let mut cols: Vec<u64> = (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    if rows.len() < 2 || cols.len() < 2 {
        return Ok(0.0);
    }
    let mut joint: Vec<u64> = table.iter().flatten().copied().filter(|&c| c > 0).collect();
    let hp = entropy(&mut rows, n);
    let ht = entropy(&mut cols, n);
    let hj = entropy(&mut joint, n);
    let value = (hp + ht - hj) / libm::sqrt(hp * ht);
    Ok(value.clamp(0.0, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    /// Smallest eigenvalue of `F_Gᵀ F_G`.
    pub lambda: f64,
    /// `‖W_G − W‖_F / n²`.
    pub lhs: f64,
    /// `((n+2)/(λn)) ‖FᵀF − F_GᵀF_G‖_F + (2n+q−1)/(λn)`; infinite when λ = 0.
    pub rhs: f64,
    /// `‖W_G − W‖_F`.
    pub delta_w: f64,
    /// `None` when λ = 0.
    pub holds: Option<bool>,
    /// λ > 0 and `‖W_G − W‖_F ≥ 1`.
    pub assumptions_met: bool,
}

/// Evaluates both sides of the bound relating weight-matrix error to the
/// label-confidence error. `f_g` is the one-hot truth, `w_g` the weights
/// learned under it.
pub fn theorem_bound_check(f: &Matrix, f_g: &Matrix, w: &Matrix, w_g: &Matrix) -> Result<BoundReport, PlcError> {
    let (n, q) = f.shape();
    if f_g.shape() != (n, q) || w.shape() != (n, n) || w_g.shape() != (n, n) {
        return Err(PlcError::Input("theorem_bound_check: shape mismatch".into()));
    }
    for i in 0..n {
        let row = f_g.row(i);
        if row.iter().any(|&v| v != 0.0 && v != 1.0) || row.iter().sum::<f64>() != 1.0 {
            return Err(PlcError::Input(format!("truth row {i} is not one-hot")));
        }
    }
    let gram_g = f_g.transpose().matmul(f_g);
    let gram = f.transpose().matmul(f);
    let (values, _) = eig_sym_smallest(&gram_g, 1)?;
    // F_G is one-hot, so F_GᵀF_G holds integer class counts.
    let lambda = if values[0] < 0.5 { 0.0 } else { values[0] };
    let delta_w = w_g.sub(w).frobenius_norm();
    let lhs = delta_w / (n * n) as f64;
    let nf = n as f64;
    if lambda == 0.0 {
        return Ok(BoundReport { lambda, lhs, rhs: f64::INFINITY, delta_w, holds: None, assumptions_met: false });
    }
    let gap = gram.sub(&gram_g).frobenius_norm();
    let rhs = (nf + 2.0) / (lambda * nf) * gap + (2.0 * nf + q as f64 - 1.0) / (lambda * nf);
    Ok(BoundReport { lambda, lhs, rhs, delta_w, holds: Some(lhs <= rhs), assumptions_met: delta_w >= 1.0 })
}
