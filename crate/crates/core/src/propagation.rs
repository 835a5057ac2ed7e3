//! Pairwise constraints and their propagation into the similarity and
//! dissimilarity codings `S` and `D`.
//!
//! With the weight matrix fixed, `S` and `D` minimize
//!
//! ```text
//! ‖D ⊙ S‖₁ + α Tr(D L Dᵀ) + β Tr(S L Sᵀ) + γ (‖P ⊙ (S − M)‖² + ‖P ⊙ (D − C)‖²)
//! ```
//!
//! over nonnegative matrices. `L` is the Laplacian of the symmetrized graph
//! `W̃ = (W + Wᵀ)/2` with degrees `Ã = diag(W̃ 1)`. With row-sum degrees of an
//! asymmetric `W` the trace terms are indefinite: a row that no column
//! selects as a neighbor has zero degree, and the objective then decreases
//! without bound as that row's codings grow. The two agree when `W` is
//! symmetric.
//!
//! The updates are multiplicative and alternate: `S` first, then `D` using
//! the fresh `S`. Each half-step splits the gradient into its positive and
//! negative parts,
//!
//! ```text
//! S ← S ⊙ (2γ P⊙M + 2β S W̃) / (D + 2β S Ã + 2γ P⊙S + δ)
//! ```
//!
//! Should a ratio step raise the objective, the square-root step
//! `S ⊙ √(num/den)` is taken instead; it minimizes a majorizer and never
//! increases the objective. All products with `W` are sparse, `O(n²k)` per
//! step.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{Matrix, SparsePattern};
use crate::error::PlcError;
use crate::graph::LaplacianPair;

/// Positive value given to entries without a constraint, so the
/// multiplicative updates can move them.
pub const INIT_EPSILON: f64 = 1e-3;
/// Denominator guard.
pub const DELTA: f64 = 1e-12;
pub const INNER_ITERATIONS: usize = 10;

/// Stopping rule for propagating a fresh state to convergence.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Warmup {
    pub max_iterations: usize,
    /// Stop once one iteration lowers the objective by less than this
    /// fraction.
    pub rel_tol: f64,
}

impl Default for Warmup {
    fn default() -> Self {
        Self { max_iterations: 1000, rel_tol: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintState {
    /// Must-link indicator.
    pub m: Matrix,
    /// Cannot-link indicator.
    pub c: Matrix,
    /// `M ∨ C`.
    pub p: Matrix,
    pub s: Matrix,
    pub d: Matrix,
    pub gamma: f64,
}

impl ConstraintState {
    /// `S = M` and `D = C` on constrained pairs, both `ε` elsewhere.
    pub fn new(m: Matrix, c: Matrix, p: Matrix, gamma: f64) -> Result<Self, PlcError> {
        let n = m.rows();
        if m.shape() != (n, n) || c.shape() != (n, n) || p.shape() != (n, n) {
            return Err(PlcError::Input("constraint matrices must be square and equally sized".into()));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(PlcError::Input(format!("gamma must be finite and nonnegative, got {gamma}")));
        }
        let s = Matrix::from_fn(n, n, |i, j| if p[(i, j)] != 0.0 { m[(i, j)] } else { INIT_EPSILON });
        let d = Matrix::from_fn(n, n, |i, j| if p[(i, j)] != 0.0 { c[(i, j)] } else { INIT_EPSILON });
        Ok(Self { m, c, p, s, d, gamma })
    }

    /// Replaces the indicator matrices, keeping `S` and `D`.
    pub fn set_constraints(&mut self, m: Matrix, c: Matrix, p: Matrix) {
        self.m = m;
        self.c = c;
        self.p = p;
    }
}

/// Must-link / cannot-link indicators from pseudo-labels. With a mask only
/// pairs of masked rows are constrained. The diagonal is never constrained.
pub fn build_constraints(labels: &[usize], scope: Option<&[bool]>) -> Result<(Matrix, Matrix, Matrix), PlcError> {
    let n = labels.len();
    if let Some(mask) = scope {
        if mask.len() != n {
            return Err(PlcError::Input(format!("scope mask has {} entries for {n} labels", mask.len())));
        }
    }
    let inside = |i: usize| scope.is_none_or(|m| m[i]);
    let mut m = Matrix::zeros(n, n);
    let mut c = Matrix::zeros(n, n);
    for i in 0..n {
        if !inside(i) {
            continue;
        }
        for j in 0..n {
            if i == j || !inside(j) {
                continue;
            }
            if labels[i] == labels[j] {
                m[(i, j)] = 1.0;
            } else {
                c[(i, j)] = 1.0;
            }
        }
    }
    let p = m.add(&c);
    Ok((m, c, p))
}

/// Fresh state propagated over `w` under the default [`Warmup`].
pub fn init_sd(
    m: Matrix,
    c: Matrix,
    p: Matrix,
    gamma: f64,
    w: &Matrix,
    alpha: f64,
    beta: f64,
) -> Result<ConstraintState, PlcError> {
    let mut state = ConstraintState::new(m, c, p, gamma)?;
    warm_up(&mut state, w, alpha, beta, Warmup::default())?;
    Ok(state)
}

/// Propagation iterations until the objective settles; returns the trace
/// as [`update_sd`] does.
///
/// Starting from `ε`, the codings spread roughly one graph hop per
/// iteration, so a fixed short warm-up leaves far unconstrained columns
/// near zero.
pub fn warm_up(
    state: &mut ConstraintState,
    w: &Matrix,
    alpha: f64,
    beta: f64,
    warmup: Warmup,
) -> Result<Vec<f64>, PlcError> {
    propagate(state, w, alpha, beta, warmup.max_iterations, Some(warmup.rel_tol))
}

/// Sparse rows of `W̃` and its degrees.
struct Propagator {
    sym_rows: Vec<Vec<(usize, f64)>>,
    degrees: Vec<f64>,
}

impl Propagator {
    fn new(w: &Matrix) -> Self {
        let sym_rows = SparsePattern::of(w).symmetric_rows();
        let degrees = sym_rows.iter().map(|r| r.iter().map(|&(_, v)| v).sum()).collect();
        Self { sym_rows, degrees }
    }

    /// `X W̃`.
    fn times_sym(&self, x: &Matrix) -> Matrix {
        let n = x.rows();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            let xi = x.row(i);
            let oi = out.row_mut(i);
            for (b, row) in self.sym_rows.iter().enumerate() {
                let v = xi[b];
                if v == 0.0 {
                    continue;
                }
                for &(j, wbj) in row {
                    oi[j] += v * wbj;
                }
            }
        }
        out
    }

    /// `Tr(X L Xᵀ) = Σᵢ Σ_b Ã_bb X_ib² − Σᵢ Σ_bj X_ib W̃_bj X_ij`.
    fn trace_form(&self, x: &Matrix) -> f64 {
        let mut total = 0.0;
        for i in 0..x.rows() {
            let xi = x.row(i);
            for (b, row) in self.sym_rows.iter().enumerate() {
                let v = xi[b];
                total += self.degrees[b] * v * v;
                if v == 0.0 {
                    continue;
                }
                let mut acc = 0.0;
                for &(j, wbj) in row {
                    acc += wbj * xi[j];
                }
                total -= v * acc;
            }
        }
        total
    }

    fn objective(&self, st: &ConstraintState, alpha: f64, beta: f64) -> f64 {
        let mut total = 0.0;
        let (s, d) = (st.s.as_slice(), st.d.as_slice());
        let (m, c, p) = (st.m.as_slice(), st.c.as_slice(), st.p.as_slice());
        for idx in 0..s.len() {
            total += d[idx] * s[idx];
            if p[idx] != 0.0 {
                let ds = p[idx] * (s[idx] - m[idx]);
                let dd = p[idx] * (d[idx] - c[idx]);
                total += st.gamma * (ds * ds + dd * dd);
            }
        }
        if alpha != 0.0 {
            total += alpha * self.trace_form(&st.d);
        }
        if beta != 0.0 {
            total += beta * self.trace_form(&st.s);
        }
        total
    }
}

/// Runs `iterations` alternating S/D steps and returns the objective after
/// each one (preceded by the starting value). The objective never increases.
pub fn update_sd(
    state: &mut ConstraintState,
    w: &Matrix,
    alpha: f64,
    beta: f64,
    iterations: usize,
) -> Result<Vec<f64>, PlcError> {
    propagate(state, w, alpha, beta, iterations, None)
}

fn propagate(
    state: &mut ConstraintState,
    w: &Matrix,
    alpha: f64,
    beta: f64,
    iterations: usize,
    rel_tol: Option<f64>,
) -> Result<Vec<f64>, PlcError> {
    let n = state.s.rows();
    if w.shape() != (n, n) {
        return Err(PlcError::Input(format!("weight matrix must be {n}x{n}")));
    }
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(PlcError::Input("alpha and beta must be nonnegative".into()));
    }
    let prop = Propagator::new(w);
    let mut current = prop.objective(state, alpha, beta);
    let mut trace = vec![current];
    for _ in 0..iterations {
        let before = current;
        current = half_step(state, &prop, alpha, beta, current, Half::S)?;
        current = half_step(state, &prop, alpha, beta, current, Half::D)?;
        trace.push(current);
        if rel_tol.is_some_and(|tol| before - current <= tol * before.abs().max(f64::MIN_POSITIVE)) {
            break;
        }
    }
    Ok(trace)
}

#[derive(Clone, Copy, PartialEq)]
enum Half {
    S,
    D,
}

fn half_step(
    state: &mut ConstraintState,
    prop: &Propagator,
    alpha: f64,
    beta: f64,
    current: f64,
    which: Half,
) -> Result<f64, PlcError> {
    let gamma = state.gamma;
    let (x, other, target, weight) = match which {
        Half::S => (&state.s, &state.d, &state.m, beta),
        Half::D => (&state.d, &state.s, &state.c, alpha),
    };
    let xw = prop.times_sym(x);
    let n = x.rows();
    let mut numer = Matrix::zeros(n, n);
    let mut denom = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let pij = state.p[(i, j)];
            numer[(i, j)] = 2.0 * gamma * pij * target[(i, j)] + 2.0 * weight * xw[(i, j)];
            denom[(i, j)] = other[(i, j)] + 2.0 * weight * x[(i, j)] * prop.degrees[j] + 2.0 * gamma * pij * x[(i, j)] + DELTA;
        }
    }
    let what = if which == Half::S { "S" } else { "D" };
    let base = x.clone();

    for sqrt_step in [false, true] {
        let mut candidate = base.clone();
        for ((dst, &nu), &de) in candidate.as_mut_slice().iter_mut().zip(numer.as_slice()).zip(denom.as_slice()) {
            let ratio = nu / de;
            *dst *= if sqrt_step { libm::sqrt(ratio) } else { ratio };
        }
        if let Some((row, col)) = candidate.first_non_finite() {
            return Err(PlcError::NonFinite { what, row, col });
        }
        let previous = match which {
            Half::S => core::mem::replace(&mut state.s, candidate),
            Half::D => core::mem::replace(&mut state.d, candidate),
        };
        let value = prop.objective(state, alpha, beta);
        if value <= current {
            return Ok(value);
        }
        match which {
            Half::S => state.s = previous,
            Half::D => state.d = previous,
        }
    }
    Ok(current)
}

/// The propagation objective for the Laplacian `lap`; [`update_sd`]
/// descends it for `lap = symmetric_laplacian(W)`.
pub fn pcp_objective(state: &ConstraintState, lap: &LaplacianPair, alpha: f64, beta: f64) -> f64 {
    let n = state.s.rows();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += state.d[(i, j)] * state.s[(i, j)];
            let pij = state.p[(i, j)];
            let ds = pij * (state.s[(i, j)] - state.m[(i, j)]);
            let dd = pij * (state.d[(i, j)] - state.c[(i, j)]);
            total += state.gamma * (ds * ds + dd * dd);
        }
    }
    let entries: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .filter_map(|(a, b)| {
            let v = lap.l[(a, b)];
            (v != 0.0).then_some((a, b, v))
        })
        .collect();
    let form = |x: &Matrix| -> f64 {
        let mut t = 0.0;
        for i in 0..n {
            let xi = x.row(i);
            for &(a, b, v) in &entries {
                t += xi[a] * v * xi[b];
            }
        }
        t
    };
    if alpha != 0.0 {
        total += alpha * form(&state.d);
    }
    if beta != 0.0 {
        total += beta * form(&state.s);
    }
    total
}
