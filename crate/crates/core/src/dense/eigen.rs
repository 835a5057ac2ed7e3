//! Dense symmetric eigensolver: Householder reduction to tridiagonal form
//! followed by implicit QL iterations with Wilkinson-style shifts.

use alloc::vec;
use alloc::vec::Vec;

use super::Matrix;
use crate::error::EigenError;

const MAX_QL_ITERATIONS: usize = 60;

/// Full eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    /// Eigenvectors stored as columns.
    pub vectors: Matrix,
}

/// The `count` smallest eigenpairs of a symmetric matrix.
///
/// Returns the eigenvalues in ascending order and an `n x count` matrix whose
/// columns are the matching orthonormal eigenvectors.
pub fn eig_sym_smallest(m: &Matrix, count: usize) -> Result<(Vec<f64>, Matrix), EigenError> {
    let n = m.rows();
    if count == 0 || count > n {
        return Err(EigenError::Count { requested: count, n });
    }
    let full = eig_sym(m)?;
    let vectors = Matrix::from_fn(n, count, |i, j| full.vectors[(i, j)]);
    let mut values = full.values;
    values.truncate(count);
    Ok((values, vectors))
}

/// Full symmetric eigendecomposition.
pub fn eig_sym(m: &Matrix) -> Result<SymmetricEigen, EigenError> {
    if !m.is_square() {
        return Err(EigenError::NotSquare { rows: m.rows(), cols: m.cols() });
    }
    if !m.is_finite() {
        return Err(EigenError::NonFinite);
    }
    let (asym, row, col) = m.max_asymmetry();
    if asym > 1e-8 * m.max_abs().max(1.0) {
        return Err(EigenError::NotSymmetric { row, col, diff: asym });
    }
    let n = m.rows();
    if n == 0 {
        return Ok(SymmetricEigen { values: Vec::new(), vectors: Matrix::zeros(0, 0) });
    }

    let mut v = m.symmetrized();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    // QL rotations touch pairs of eigenvector columns; work on the transpose
    // so each rotation streams over contiguous rows.
    let mut z = v.transpose();
    tql(&mut z, &mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| z[(order[j], i)]);
    Ok(SymmetricEigen { values, vectors })
}

/// Householder reduction of the symmetric matrix held in `v` to tridiagonal
/// form. On return `d` holds the diagonal, `e[1..]` the subdiagonal and `v`
/// the accumulated orthogonal transform.
fn tridiagonalize(v: &mut Matrix, d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    for j in 0..n {
        d[j] = v[(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for dk in d.iter().take(i) {
            scale += dk.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
                v[(j, i)] = 0.0;
            }
        } else {
            for dk in d.iter_mut().take(i) {
                *dk /= scale;
                h += *dk * *dk;
            }
            let f = d[i - 1];
            let mut g = libm::sqrt(h);
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for ej in e.iter_mut().take(i) {
                *ej = 0.0;
            }

            for j in 0..i {
                let f = d[j];
                v[(j, i)] = f;
                let mut g = e[j] + v[(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[(k, j)] * d[k];
                    e[k] += v[(k, j)] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1, j)];
                v[(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[(n - 1, i)] = v[(i, i)];
        v[(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[(k, i + 1)] * v[(k, j)];
                }
                for k in 0..=i {
                    v[(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1, j)];
        v[(n - 1, j)] = 0.0;
    }
    v[(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal `(d, e)`. `z` holds eigenvectors as rows.
fn tql(z: &mut Matrix, d: &mut [f64], e: &mut [f64]) -> Result<(), EigenError> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        // e[n-1] is zero, so m < n always holds here.
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(EigenError::NoConvergence { index: l, iterations: iter - 1 });
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = libm::hypot(p, 1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = libm::hypot(p, e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    rotate_rows(z, i, s, c);
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[inline]
fn rotate_rows(z: &mut Matrix, i: usize, s: f64, c: f64) {
    let n = z.cols();
    let data = z.as_mut_slice();
    let (head, tail) = data.split_at_mut((i + 1) * n);
    let row_i = &mut head[i * n..];
    let row_next = &mut tail[..n];
    for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
        let h = *b;
        *b = s * *a + c * h;
        *a = c * *a - s * h;
    }
}
