//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's numerics.

#![allow(dead_code)]

use plc_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(lo..hi))
}

/// `BᵀB` for a random `rank × k` matrix `B`.
pub fn random_psd(rng: &mut ChaCha8Rng, k: usize, rank: usize, scale: f64) -> Matrix {
    let b = random_matrix(rng, rank, k, -scale, scale);
    let mut g = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = (0..rank).map(|r| b[(r, i)] * b[(r, j)]).sum();
        }
    }
    for i in 0..k {
        for j in 0..i {
            g[(i, j)] = g[(j, i)];
        }
    }
    g
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    let a = random_matrix(rng, n, n, -1.0, 1.0);
    Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Labels in `0..q` with every class present at least `min_each` times.
pub fn random_labels(rng: &mut ChaCha8Rng, n: usize, q: usize, min_each: usize) -> Vec<usize> {
    assert!(n >= q * min_each);
    let mut labels: Vec<usize> = (0..q).flat_map(|c| std::iter::repeat_n(c, min_each)).collect();
    while labels.len() < n {
        labels.push(rng.random_range(0..q));
    }
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    labels
}

// ---------------------------------------------------------------- QP oracle

pub fn qp_objective(gram: &Matrix, linear: &[f64], w: &[f64]) -> f64 {
    let k = w.len();
    let mut total = 0.0;
    for i in 0..k {
        for j in 0..k {
            total += w[i] * gram[(i, j)] * w[j];
        }
        total += linear[i] * w[i];
    }
    total
}

/// Box bounds that keep the capped simplex nonempty; all ones half the time.
pub fn random_upper(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    if rng.random_bool(0.5) {
        return vec![1.0; k];
    }
    let mut u: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let sum: f64 = u.iter().sum();
    if sum < 1.2 {
        u.iter_mut().for_each(|v| *v = (*v * 1.2 / sum).min(1.0));
    }
    u
}

/// Euclidean projection onto `{w : Σw = 1, 0 ≤ w ≤ u}` by bisection on the
/// shift `τ` in `w = clamp(v − τ, 0, u)`.
pub fn bisection_projection(v: &[f64], upper: &[f64]) -> Vec<f64> {
    let mass = |tau: f64| -> f64 { v.iter().zip(upper).map(|(&x, &u)| (x - tau).clamp(0.0, u)).sum() };
    let mut lo = v.iter().zip(upper).map(|(&x, &u)| x - u).fold(f64::INFINITY, f64::min) - 1.0;
    let mut hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    v.iter().zip(upper).map(|(&x, &u)| (x - tau).clamp(0.0, u)).collect()
}

/// Accelerated projected gradient with adaptive restart, stopped when an
/// iteration moves less than `1e-10` or after `iterations` steps. Returns
/// the best point seen.
pub fn pg_oracle(gram: &Matrix, linear: &[f64], upper: &[f64], iterations: usize) -> Vec<f64> {
    let k = linear.len();
    let lipschitz = 2.0 * gram.frobenius_norm() + 1e-12;
    let grad = |w: &[f64]| -> Vec<f64> {
        (0..k).map(|i| 2.0 * (0..k).map(|j| gram[(i, j)] * w[j]).sum::<f64>() + linear[i]).collect()
    };
    let start: Vec<f64> = vec![1.0 / k as f64; k];
    let mut x = bisection_projection(&start, upper);
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let mut best = x.clone();
    let mut best_value = qp_objective(gram, linear, &x);
    for _ in 0..iterations {
        let g = grad(&y);
        let step: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - gi / lipschitz).collect();
        let next = bisection_projection(&step, upper);
        let moved = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let value = qp_objective(gram, linear, &next);
        if value < best_value {
            best_value = value;
            best = next.clone();
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        // restart momentum when it points uphill
        let uphill: f64 = g.iter().zip(next.iter().zip(&x)).map(|(gi, (a, b))| gi * (a - b)).sum();
        if uphill > 0.0 {
            t = 1.0;
            y = next.clone();
        } else {
            let momentum = (t - 1.0) / t_next;
            y = next.iter().zip(&x).map(|(a, b)| a + momentum * (a - b)).collect();
            t = t_next;
        }
        x = next;
        if moved < 1e-10 {
            break;
        }
    }
    best
}

// ------------------------------------------------------------ eigen oracle

/// Characteristic polynomial coefficients `c[0..=n]` of `det(λI − A)`,
/// highest degree first, by the Faddeev–LeVerrier recursion.
pub fn characteristic_polynomial(a: &Matrix) -> Vec<f64> {
    let n = a.rows();
    let mut coeffs = vec![1.0];
    let mut m = Matrix::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{k-1} I
        let mut next = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                next[(i, j)] = (0..n).map(|l| a[(i, l)] * m[(l, j)]).sum();
            }
            next[(i, i)] += coeffs[k - 1];
        }
        m = next;
        let am_trace: f64 = (0..n).map(|i| (0..n).map(|l| a[(i, l)] * m[(l, i)]).sum::<f64>()).sum();
        coeffs.push(-am_trace / k as f64);
    }
    coeffs
}

fn horner(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Real roots of a polynomial with only real roots, ascending: the roots of
/// the companion matrix found by Durand–Kerner iteration, then polished by
/// Newton steps on the real axis.
pub fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len() - 1;
    let lead = coeffs[0];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    let radius = 1.0 + monic[1..].iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    // complex numbers as (re, im)
    let mul = |a: (f64, f64), b: (f64, f64)| (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0);
    let div = |a: (f64, f64), b: (f64, f64)| {
        let d = b.0 * b.0 + b.1 * b.1;
        ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
    };
    let eval = |z: (f64, f64)| monic.iter().fold((0.0, 0.0), |acc, &c| {
        let p = mul(acc, z);
        (p.0 + c, p.1)
    });
    let mut z: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let angle = 2.0 * std::f64::consts::PI * i as f64 / n as f64 + 0.4;
            (radius * 0.9 * angle.cos(), radius * 0.9 * angle.sin())
        })
        .collect();
    for _ in 0..5000 {
        let mut change = 0.0_f64;
        for i in 0..n {
            let mut denom = (1.0, 0.0);
            for j in 0..n {
                if i != j {
                    denom = mul(denom, (z[i].0 - z[j].0, z[i].1 - z[j].1));
                }
            }
            let delta = div(eval(z[i]), denom);
            z[i] = (z[i].0 - delta.0, z[i].1 - delta.1);
            change = change.max(delta.0.abs() + delta.1.abs());
        }
        if change < 1e-15 {
            break;
        }
    }
    let mut roots: Vec<f64> = z
        .iter()
        .map(|&(re, _)| {
            let mut x = re;
            for _ in 0..20 {
                let (p, dp) = horner(&monic, x);
                if dp == 0.0 {
                    break;
                }
                let next = x - p / dp;
                if (next - x).abs() > 1e-3 {
                    break;
                }
                x = next;
            }
            x
        })
        .collect();
    roots.sort_by(f64::total_cmp);
    roots
}

// ------------------------------------------------------------- brute force

/// Every assignment of `n` items to `0..l` (`lⁿ` of them).
pub fn all_assignments(n: usize, l: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = l.pow(n as u32);
    (0..total).map(move |mut code| {
        (0..n)
            .map(|_| {
                let c = code % l;
                code /= l;
                c
            })
            .collect()
    })
}

/// Within-cluster sum of squared distances to the cluster means.
pub fn wcss(points: &Matrix, assignment: &[usize]) -> f64 {
    let (n, d) = points.shape();
    let l = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut total = 0.0;
    for c in 0..l {
        let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
        if members.is_empty() {
            continue;
        }
        for dim in 0..d {
            let mean = members.iter().map(|&i| points[(i, dim)]).sum::<f64>() / members.len() as f64;
            total += members.iter().map(|&i| (points[(i, dim)] - mean).powi(2)).sum::<f64>();
        }
    }
    total
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(current.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| current[i] < current[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| current[j] > current[i]).unwrap();
        current.swap(i, j);
        current[i + 1..].reverse();
    }
    out
}

/// Best agreement over every one-to-one relabeling of the clusters.
pub fn acc_brute_force(pred: &[usize], truth: &[usize]) -> f64 {
    let size = pred.iter().chain(truth).copied().max().unwrap() + 1;
    permutations(size)
        .iter()
        .map(|perm| pred.iter().zip(truth).filter(|&(&p, &t)| perm[p] == t).count())
        .max()
        .unwrap() as f64
        / pred.len() as f64
}

/// `Σᵢⱼ p(i,j) ln(p(i,j) / (p(i) p(j))) / √(H(pred) H(truth))`, term by term.
pub fn nmi_direct(pred: &[usize], truth: &[usize]) -> f64 {
    let n = pred.len() as f64;
    let a = pred.iter().copied().max().unwrap() + 1;
    let b = truth.iter().copied().max().unwrap() + 1;
    let mut counts = vec![vec![0usize; b]; a];
    for (&p, &t) in pred.iter().zip(truth) {
        counts[p][t] += 1;
    }
    let joint: Vec<Vec<f64>> = counts.iter().map(|r| r.iter().map(|&c| c as f64 / n).collect()).collect();
    let pa: Vec<f64> = counts.iter().map(|r| r.iter().sum::<usize>() as f64 / n).collect();
    let pb: Vec<f64> = (0..b).map(|j| counts.iter().map(|r| r[j]).sum::<usize>() as f64 / n).collect();
    let mut mi = 0.0;
    for i in 0..a {
        for j in 0..b {
            if joint[i][j] > 0.0 {
                mi += joint[i][j] * (joint[i][j] / (pa[i] * pb[j])).ln();
            }
        }
    }
    let h = |p: &[f64]| -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>();
    let (ha, hb) = (h(&pa), h(&pb));
    if ha <= 0.0 || hb <= 0.0 {
        return 0.0;
    }
    mi / (ha * hb).sqrt()
}

/// Normalized cut `cut(A,B)/vol(A) + cut(A,B)/vol(B)` of a symmetric graph.
pub fn normalized_cut(w: &Matrix, side: &[bool]) -> f64 {
    let n = w.rows();
    let (mut cut, mut vol_a, mut vol_b) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let wij = w[(i, j)];
            if side[i] {
                vol_a += wij;
                if !side[j] {
                    cut += wij;
                }
            } else {
                vol_b += wij;
            }
        }
    }
    cut / vol_a + cut / vol_b
}

/// Two assignments describe the same partition.
pub fn same_partition(a: &[usize], b: &[usize]) -> bool {
    a.len() == b.len()
        && (0..a.len()).all(|i| (0..a.len()).all(|j| (a[i] == a[j]) == (b[i] == b[j])))
}

// --------------------------------------------------------- objective sums

/// `Σⱼ ‖vⱼ − Σᵢ wᵢⱼ vᵢ‖²` by explicit loops.
pub fn reconstruction_naive(w: &Matrix, v: &Matrix) -> f64 {
    let (n, q) = v.shape();
    let mut total = 0.0;
    for j in 0..n {
        for c in 0..q {
            let mut r = v[(j, c)];
            for i in 0..n {
                r -= w[(i, j)] * v[(i, c)];
            }
            total += r * r;
        }
    }
    total
}

/// `Tr(X L Xᵀ)` by a triple loop.
pub fn trace_naive(x: &Matrix, l: &Matrix) -> f64 {
    let n = x.rows();
    let mut total = 0.0;
    for i in 0..n {
        for a in 0..n {
            for b in 0..n {
                total += x[(i, a)] * l[(a, b)] * x[(i, b)];
            }
        }
    }
    total
}

/// `diag(W̃1) − W̃` for `W̃ = (W + Wᵀ)/2`, built entry by entry.
pub fn symmetric_laplacian_naive(w: &Matrix) -> Matrix {
    let n = w.rows();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        let mut degree = 0.0;
        for j in 0..n {
            let s = 0.5 * (w[(i, j)] + w[(j, i)]);
            degree += s;
            l[(i, j)] = -s;
        }
        l[(i, i)] += degree;
    }
    l
}

/// `‖D⊙S‖₁ + α Tr(DLDᵀ) + β Tr(SLSᵀ) + γ(‖P⊙(S−M)‖² + ‖P⊙(D−C)‖²)`.
#[allow(clippy::too_many_arguments)]
pub fn pcp_naive(s: &Matrix, d: &Matrix, m: &Matrix, c: &Matrix, p: &Matrix, l: &Matrix, alpha: f64, beta: f64, gamma: f64) -> f64 {
    let n = s.rows();
    let mut adversarial = 0.0;
    let mut clamp = 0.0;
    for i in 0..n {
        for j in 0..n {
            adversarial += (d[(i, j)] * s[(i, j)]).abs();
            clamp += (p[(i, j)] * (s[(i, j)] - m[(i, j)])).powi(2) + (p[(i, j)] * (d[(i, j)] - c[(i, j)])).powi(2);
        }
    }
    adversarial + alpha * trace_naive(d, l) + beta * trace_naive(s, l) + gamma * clamp
}

/// A random column-stochastic matrix supported on `k` random rows per
/// column (never the diagonal).
pub fn random_column_stochastic(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Matrix {
    let mut w = Matrix::zeros(n, n);
    for j in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        let picks = rand::seq::index::sample(rng, others.len(), k);
        let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        for (idx, r) in picks.iter().zip(raw) {
            w[(others[idx], j)] = r / sum;
        }
    }
    w
}

/// A random row-stochastic matrix supported on the ones of `support`.
pub fn random_row_stochastic(rng: &mut ChaCha8Rng, support: &Matrix) -> Matrix {
    let (n, q) = support.shape();
    let mut f = Matrix::zeros(n, q);
    for i in 0..n {
        let raw: Vec<f64> = (0..q).map(|c| if support[(i, c)] != 0.0 { rng.random_range(0.05..1.0) } else { 0.0 }).collect();
        let sum: f64 = raw.iter().sum();
        for c in 0..q {
            f[(i, c)] = raw[c] / sum;
        }
    }
    f
}

pub fn one_hot(labels: &[usize], q: usize) -> Matrix {
    Matrix::from_fn(labels.len(), q, |i, c| if labels[i] == c { 1.0 } else { 0.0 })
}

/// A random instance satisfying the bound's premises: every class present,
/// `W_G` column-stochastic on same-label neighbors, `‖W_G − W‖_F ≥ 1`.
pub fn premise_instance(r: &mut ChaCha8Rng) -> (Matrix, Matrix, Matrix, Matrix) {
    loop {
        let n = r.random_range(10..=30);
        let q = r.random_range(2..=4);
        let truth = random_labels(r, n, q, 2);
        let f_g = one_hot(&truth, q);
        let k = r.random_range(1..=5);
        let mut w_g = Matrix::zeros(n, n);
        for j in 0..n {
            let same: Vec<usize> = (0..n).filter(|&i| i != j && truth[i] == truth[j]).collect();
            let m = k.min(same.len());
            let picks = rand::seq::index::sample(r, same.len(), m);
            let raw: Vec<f64> = (0..m).map(|_| r.random_range(0.05..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            for (idx, v) in picks.iter().zip(raw) {
                w_g[(same[idx], j)] = v / sum;
            }
        }
        let w = random_column_stochastic(r, n, k.min(n - 1));
        let candidates = Matrix::from_fn(n, q, |i, c| if c == truth[i] || r.random_bool(0.4) { 1.0 } else { 0.0 });
        let f = random_row_stochastic(r, &candidates);
        if w_g.sub(&w).frobenius_norm() >= 1.0 {
            return (f, f_g, w, w_g);
        }
    }
}
