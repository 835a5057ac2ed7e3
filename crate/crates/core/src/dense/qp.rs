//! Convex quadratic programs over a capped simplex:
//!
//! ```text
//! minimize   wᵀ G w + cᵀ w
//! subject to Σ w = 1,  0 ≤ w ≤ u
//! ```
//!
//! with `G` symmetric positive semidefinite. Both the reconstruction-weight
//! columns and the label-confidence rows are problems of this shape, always
//! small (tens of variables), so a primal active-set method with exact
//! subspace steps is used. Singular reduced Hessians are handled through an
//! eigendecomposition of the reduced problem: zero-curvature descent
//! directions are followed to the next bound. If the working set cycles, an
//! accelerated projected-gradient method finishes the solve.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::eigen::eig_sym;
use super::matrix::{dot, Matrix};
use crate::error::QpError;

/// Default KKT tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;

const SYMMETRY_TOL: f64 = 1e-10;
const PG_MAX_ITERATIONS: usize = 100_000;

#[derive(Clone, Debug)]
pub struct SimplexBoxQp {
    gram: Matrix,
    linear: Vec<f64>,
    upper: Vec<f64>,
    /// Step normalizer for the projected-gradient residual, an upper bound
    /// on the Lipschitz constant of the gradient (at least 1).
    lipschitz: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub weights: Vec<f64>,
    pub objective: f64,
    pub residual: f64,
    pub iterations: usize,
    /// True when the active-set phase gave up and projected gradient finished.
    pub used_fallback: bool,
}

impl SimplexBoxQp {
    pub fn new(gram: Matrix, linear: Vec<f64>, upper: Vec<f64>) -> Result<Self, QpError> {
        let k = linear.len();
        if k == 0 {
            return Err(QpError::Dimension("empty problem".into()));
        }
        if gram.shape() != (k, k) || upper.len() != k {
            return Err(QpError::Dimension(format!(
                "gram {}x{}, linear {}, upper {}",
                gram.rows(),
                gram.cols(),
                k,
                upper.len()
            )));
        }
        if !gram.is_finite() || linear.iter().any(|v| !v.is_finite()) {
            return Err(QpError::Input("non-finite gram or linear term".into()));
        }
        if let Some(u) = upper.iter().find(|u| !(0.0..=1.0).contains(*u)) {
            return Err(QpError::Input(format!("upper bound {u} outside [0, 1]")));
        }
        for i in 0..k {
            for j in (i + 1)..k {
                let (a, b) = (gram[(i, j)], gram[(j, i)]);
                let diff = (a - b).abs();
                if diff > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                    return Err(QpError::NotSymmetric { row: i, col: j, diff });
                }
            }
        }
        let sum: f64 = upper.iter().sum();
        if sum < 1.0 - 1e-12 {
            return Err(QpError::Infeasible { sum });
        }
        let row_bound = gram.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        let lipschitz = (2.0 * row_bound).max(1.0);
        Ok(Self { gram, linear, upper, lipschitz })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// `wᵀ G w + cᵀ w`.
    pub fn objective(&self, w: &[f64]) -> f64 {
        let gw = self.gram.matvec(w);
        dot(w, &gw) + dot(&self.linear, w)
    }

    /// `2 G w + c`.
    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let mut g = self.gram.matvec(w);
        for (gi, ci) in g.iter_mut().zip(&self.linear) {
            *gi = 2.0 * *gi + ci;
        }
        g
    }

    /// Projected-gradient stationarity residual `‖w − Π(w − ∇f(w)/L)‖∞`.
    /// Zero exactly at KKT points.
    pub fn kkt_residual(&self, w: &[f64]) -> f64 {
        let g = self.gradient(w);
        let trial: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - gi / self.lipschitz).collect();
        let p = project_capped_simplex(&trial, &self.upper);
        w.iter().zip(&p).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Solves the QP starting from the uniform point projected onto the
/// feasible set.
pub fn solve_simplex_box_qp(problem: &SimplexBoxQp, tol: f64) -> Result<QpSolution, QpError> {
    let k = problem.dim();
    let start = project_capped_simplex(&vec![1.0 / k as f64; k], &problem.upper);
    solve_from_feasible(problem, start, tol)
}

/// Solves the QP warm-started at `start`, which is projected onto the
/// feasible set first. A start that already satisfies the KKT conditions is
/// returned unchanged, so degenerate problems keep the caller's point.
pub fn solve_simplex_box_qp_from(problem: &SimplexBoxQp, start: &[f64], tol: f64) -> Result<QpSolution, QpError> {
    if start.len() != problem.dim() {
        return Err(QpError::Dimension(format!("start has {} entries, expected {}", start.len(), problem.dim())));
    }
    if start.iter().any(|v| !v.is_finite()) {
        return Err(QpError::Input("non-finite start".into()));
    }
    let start = project_capped_simplex(start, &problem.upper);
    if tol > 0.0 {
        let residual = problem.kkt_residual(&start);
        if residual <= tol {
            let objective = problem.objective(&start);
            return Ok(QpSolution { weights: start, objective, residual, iterations: 0, used_fallback: false });
        }
    }
    solve_from_feasible(problem, start, tol)
}

fn solve_from_feasible(problem: &SimplexBoxQp, start: Vec<f64>, tol: f64) -> Result<QpSolution, QpError> {
    if !(tol > 0.0) {
        return Err(QpError::Input(format!("tolerance must be positive, got {tol}")));
    }
    let k = problem.dim();
    let max_iterations = 20 * (k + 5);
    let (mut w, iterations, converged) = active_set(problem, start, max_iterations);
    finish(&mut w, &problem.upper);
    let mut residual = problem.kkt_residual(&w);
    let mut used_fallback = false;
    let mut total = iterations;
    if !converged || residual > tol {
        let (pw, pit) = projected_gradient(problem, &w, tol);
        used_fallback = true;
        total += pit;
        let pres = problem.kkt_residual(&pw);
        if pres <= residual {
            w = pw;
            residual = pres;
        }
    }
    if residual > tol {
        return Err(QpError::NotConverged { iterations: total, residual });
    }
    let objective = problem.objective(&w);
    Ok(QpSolution { weights: w, objective, residual, iterations: total, used_fallback })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Bound {
    Free,
    Lower,
    Upper,
    /// Upper bound zero: the variable is pinned at 0.
    Pinned,
}

/// Primal active-set iterations. Returns the point, the iteration count and
/// whether optimality was certified before the iteration cap.
fn active_set(problem: &SimplexBoxQp, mut w: Vec<f64>, max_iterations: usize) -> (Vec<f64>, usize, bool) {
    let k = problem.dim();
    let u = &problem.upper;
    let mut status: Vec<Bound> = (0..k)
        .map(|i| {
            if u[i] <= 0.0 {
                Bound::Pinned
            } else if w[i] <= 0.0 {
                Bound::Lower
            } else if w[i] >= u[i] {
                Bound::Upper
            } else {
                Bound::Free
            }
        })
        .collect();
    for i in 0..k {
        match status[i] {
            Bound::Pinned | Bound::Lower => w[i] = 0.0,
            Bound::Upper => w[i] = u[i],
            Bound::Free => {}
        }
    }

    let mut at_subspace_min = false;
    for iteration in 1..=max_iterations {
        let g = problem.gradient(&w);
        let free: Vec<usize> = (0..k).filter(|&i| status[i] == Bound::Free).collect();

        if !at_subspace_min && free.len() >= 2 {
            match subspace_step(problem, &free, &g) {
                // Falls through to the multiplier check.
                Step::Zero => {}
                Step::Direction { p, newton } => {
                    let mut alpha = if newton { 1.0 } else { f64::INFINITY };
                    let mut blocking: Option<(usize, Bound)> = None;
                    for (idx, &i) in free.iter().enumerate() {
                        let pi = p[idx];
                        if pi < 0.0 {
                            let ratio = w[i] / -pi;
                            if ratio < alpha {
                                alpha = ratio;
                                blocking = Some((i, Bound::Lower));
                            }
                        } else if pi > 0.0 {
                            let ratio = (u[i] - w[i]) / pi;
                            if ratio < alpha {
                                alpha = ratio;
                                blocking = Some((i, Bound::Upper));
                            }
                        }
                    }
                    if !alpha.is_finite() {
                        // A zero-curvature direction with Σp = 0 always hits
                        // a bound; reaching here means p underflowed.
                        at_subspace_min = true;
                    } else {
                        let alpha = alpha.max(0.0);
                        for (idx, &i) in free.iter().enumerate() {
                            w[i] = (w[i] + alpha * p[idx]).clamp(0.0, u[i]);
                        }
                        match blocking {
                            Some((i, bound)) => {
                                w[i] = if bound == Bound::Lower { 0.0 } else { u[i] };
                                status[i] = bound;
                                at_subspace_min = false;
                            }
                            None => at_subspace_min = true,
                        }
                    }
                    continue;
                }
            }
        }

        // Multiplier check. On the free set stationarity gives g_i + ν = 0.
        let g_scale = g.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mult_tol = 1e-11 * g_scale;
        let nu = if free.is_empty() {
            let lo = (0..k)
                .filter(|&i| status[i] == Bound::Lower)
                .map(|i| -g[i])
                .fold(f64::NEG_INFINITY, f64::max);
            let hi = (0..k)
                .filter(|&i| status[i] == Bound::Upper)
                .map(|i| -g[i])
                .fold(f64::INFINITY, f64::min);
            match (lo.is_finite(), hi.is_finite()) {
                (true, true) => 0.5 * (lo + hi),
                (true, false) => lo,
                (false, true) => hi,
                (false, false) => 0.0,
            }
        } else {
            -free.iter().map(|&i| g[i]).sum::<f64>() / free.len() as f64
        };

        let mut worst: Option<(usize, f64)> = None;
        for i in 0..k {
            let violation = match status[i] {
                Bound::Lower => -(g[i] + nu),
                Bound::Upper => g[i] + nu,
                Bound::Free | Bound::Pinned => continue,
            };
            if violation > mult_tol && worst.is_none_or(|(_, v)| violation > v) {
                worst = Some((i, violation));
            }
        }
        match worst {
            None => return (w, iteration, true),
            Some((i, _)) => {
                status[i] = Bound::Free;
                at_subspace_min = false;
            }
        }
    }
    (w, max_iterations, false)
}

enum Step {
    Zero,
    Direction { p: Vec<f64>, newton: bool },
}

/// Minimizes `½ pᵀ Q p + gᵀ p` over `Σ p = 0` on the free variables, with
/// `Q = 2 G`. Works in an orthonormal basis of the null space of `1ᵀ` built
/// from one Householder reflector.
fn subspace_step(problem: &SimplexBoxQp, free: &[usize], g: &[f64]) -> Step {
    let m = free.len();
    let q = Matrix::from_fn(m, m, |a, b| 2.0 * problem.gram[(free[a], free[b])]);
    let gf: Vec<f64> = free.iter().map(|&i| g[i]).collect();

    // H = I − β u uᵀ maps e₁ to 1/√m; its last m−1 columns span {p : Σp = 0}.
    let mut hv = vec![1.0 / libm::sqrt(m as f64); m];
    hv[0] -= 1.0;
    let beta = 2.0 / dot(&hv, &hv);
    let qu = q.matvec(&hv);
    let uqu = dot(&hv, &qu);
    let ug = dot(&hv, &gf);
    let reduced = Matrix::from_fn(m - 1, m - 1, |a, b| {
        let (a, b) = (a + 1, b + 1);
        q[(a, b)] - beta * hv[a] * qu[b] - beta * qu[a] * hv[b] + beta * beta * uqu * hv[a] * hv[b]
    })
    .symmetrized();
    let rg: Vec<f64> = (1..m).map(|a| gf[a] - beta * hv[a] * ug).collect();

    let scale = (0..m - 1).fold(1.0_f64, |s, i| s.max(reduced[(i, i)].abs()));
    let curvature_tol = 1e-12 * scale;

    let (y, newton) = match cholesky_solve(&reduced, &rg, curvature_tol) {
        Some(y) => (y, true),
        None => match eig_sym(&reduced) {
            Ok(eig) => {
                let g_norm = libm::sqrt(dot(&rg, &rg));
                let mut null_part = vec![0.0; m - 1];
                let mut newton_part = vec![0.0; m - 1];
                for (j, &lambda) in eig.values.iter().enumerate() {
                    let v = eig.vectors.column(j);
                    let c = dot(&v, &rg);
                    if lambda <= curvature_tol {
                        for (np, vi) in null_part.iter_mut().zip(&v) {
                            *np -= c * vi;
                        }
                    } else {
                        for (np, vi) in newton_part.iter_mut().zip(&v) {
                            *np -= c / lambda * vi;
                        }
                    }
                }
                let null_norm = libm::sqrt(dot(&null_part, &null_part));
                if null_norm > 1e-13 * g_norm.max(1e-300) && null_norm > 1e-300 {
                    (null_part, false)
                } else {
                    (newton_part, true)
                }
            }
            Err(_) => return Step::Zero,
        },
    };

    // p = H [0; y]
    let uy: f64 = (1..m).map(|a| hv[a] * y[a - 1]).sum();
    let p: Vec<f64> = (0..m)
        .map(|a| {
            let base = if a == 0 { 0.0 } else { y[a - 1] };
            base - beta * hv[a] * uy
        })
        .collect();
    let p_norm = p.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    if p_norm <= 1e-15 || p.iter().any(|v| !v.is_finite()) {
        Step::Zero
    } else {
        Step::Direction { p, newton }
    }
}

/// Solves `R y = −r` by Cholesky; `None` when a pivot falls below `tol`.
fn cholesky_solve(r: &Matrix, rhs: &[f64], tol: f64) -> Option<Vec<f64>> {
    let n = r.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut diag = r[(j, j)];
        for k in 0..j {
            diag -= l[(j, k)] * l[(j, k)];
        }
        if !(diag > tol) {
            return None;
        }
        let ljj = libm::sqrt(diag);
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = r[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = -rhs[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    Some(y)
}

/// Accelerated projected gradient with adaptive restart.
fn projected_gradient(problem: &SimplexBoxQp, start: &[f64], tol: f64) -> (Vec<f64>, usize) {
    let step = 1.0 / problem.lipschitz;
    let u = &problem.upper;
    let mut x = project_capped_simplex(start, u);
    let mut y = x.clone();
    let mut fx = problem.objective(&x);
    let mut t = 1.0_f64;
    for it in 1..=PG_MAX_ITERATIONS {
        let g = problem.gradient(&y);
        let trial: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| yi - step * gi).collect();
        let x_new = project_capped_simplex(&trial, u);
        let f_new = problem.objective(&x_new);
        let t_new = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
        if f_new > fx {
            // restart momentum
            y = x.clone();
            t = 1.0;
            continue;
        }
        let momentum = (t - 1.0) / t_new;
        y = x_new.iter().zip(&x).map(|(a, b)| a + momentum * (a - b)).collect();
        x = x_new;
        fx = f_new;
        t = t_new;
        if it % 16 == 0 && problem.kkt_residual(&x) <= 0.1 * tol {
            return (x, it);
        }
    }
    (x, PG_MAX_ITERATIONS)
}

/// Clamps into the box and spreads any rounding drift of `Σ w` over the free
/// coordinates.
fn finish(w: &mut [f64], upper: &[f64]) {
    for (wi, &ui) in w.iter_mut().zip(upper) {
        *wi = wi.clamp(0.0, ui);
    }
    let drift = 1.0 - w.iter().sum::<f64>();
    if drift == 0.0 {
        return;
    }
    let mut movable: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 0.0 && w[i] < upper[i]).collect();
    if movable.is_empty() {
        movable = (0..w.len())
            .filter(|&i| if drift > 0.0 { w[i] < upper[i] } else { w[i] > 0.0 })
            .collect();
    }
    if movable.is_empty() {
        return;
    }
    let share = drift / movable.len() as f64;
    for i in movable {
        w[i] = (w[i] + share).clamp(0.0, upper[i]);
    }
}

/// Euclidean projection onto `{w : Σw = 1, 0 ≤ w ≤ u}`.
///
/// Finds the threshold `τ` with `Σ clamp(v − τ, 0, u) = 1` exactly by walking
/// the sorted breakpoints of the piecewise-linear sum. Requires `Σu ≥ 1`;
/// when `Σu < 1` the result is `u` itself (the closest point of the box).
pub fn project_capped_simplex(v: &[f64], upper: &[f64]) -> Vec<f64> {
    assert_eq!(v.len(), upper.len(), "project_capped_simplex: length mismatch");
    let in_box = v.iter().zip(upper).all(|(vi, ui)| (0.0..=*ui).contains(vi));
    if in_box && (v.iter().sum::<f64>() - 1.0).abs() <= 4.0 * f64::EPSILON * v.len() as f64 {
        return v.to_vec();
    }
    let mass = |tau: f64| -> f64 { v.iter().zip(upper).map(|(vi, ui)| (vi - tau).clamp(0.0, *ui)).sum() };
    let mut breaks: Vec<f64> = v.iter().zip(upper).flat_map(|(vi, ui)| [vi - ui, *vi]).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let first = breaks[0];
    if mass(first) <= 1.0 {
        return v.iter().zip(upper).map(|(vi, ui)| (vi - first).clamp(0.0, *ui)).collect();
    }
    let mut prev = first;
    let mut prev_mass = mass(first);
    let mut tau = *breaks.last().unwrap();
    for &b in &breaks[1..] {
        let m = mass(b);
        if m <= 1.0 {
            tau = if prev_mass > m { prev + (prev_mass - 1.0) * (b - prev) / (prev_mass - m) } else { b };
            break;
        }
        prev = b;
        prev_mass = m;
    }
    v.iter().zip(upper).map(|(vi, ui)| (vi - tau).clamp(0.0, *ui)).collect()
}
