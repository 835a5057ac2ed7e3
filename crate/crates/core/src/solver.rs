//! The alternating minimization driver and its ablation variants.
//!
//! After initialization (neighbors, feature-only weights, confidences
//! disambiguated to convergence over those weights, constraints from the
//! pseudo-labels, `S`/`D` propagated to convergence), every outer
//! iteration updates the weight columns, sweeps the confidences, optionally
//! rebuilds the constraints from the new pseudo-labels, and runs a few
//! propagation steps. The loop stops when the relative change of the joint
//! objective falls below `rel_tol` or after `max_outer` iterations.

use alloc::format;
use alloc::vec::Vec;

use crate::clustering::{spectral_cluster, SpectralResult};
use crate::data::PartialLabelProblem;
use crate::dense::Matrix;
use crate::disambiguation::{
    disambiguation_objective, init_confidence, pseudo_labels, update_confidence, ConfidenceMatrix,
};
use crate::error::PlcError;
use crate::graph::{build_knn, init_weights, reconstruction_error, symmetric_laplacian, update_weights_with, WeightGraph};
use crate::propagation::{
    build_constraints, pcp_objective, update_sd, warm_up, ConstraintState, Warmup, INNER_ITERATIONS,
};

/// Cap on the confidence sweeps run at initialization.
pub const INIT_SWEEPS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Variant {
    /// Weights, confidences and propagation, all coupled.
    Full,
    /// Feature-only weights; nothing else.
    Cw,
    /// Weights and confidences without propagation.
    Ld,
    /// Weights coupled to propagation only; confidences stay at their
    /// uniform start and constraints come from it once.
    Sd,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct PlcConfig {
    pub k: usize,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Number of clusters for the final spectral step.
    pub clusters: usize,
    pub max_outer: usize,
    pub rel_tol: f64,
    pub variant: Variant,
    pub seed: u64,
    /// Rebuild constraints from the current pseudo-labels every iteration.
    pub refresh_constraints: bool,
    /// Constrain all pairs instead of labeled pairs only.
    pub all_pairs: bool,
    pub inner_iterations: usize,
    /// Confidence sweeps at initialization stop after this many, or earlier
    /// once the objective changes by less than `rel_tol`.
    pub init_sweeps: usize,
    /// Propagation of the initial constraints.
    pub warmup: Warmup,
}

impl Default for PlcConfig {
    fn default() -> Self {
        Self {
            k: 10,
            alpha: 0.1,
            beta: 0.1,
            gamma: 10.0,
            clusters: 2,
            max_outer: 50,
            rel_tol: 1e-5,
            variant: Variant::Full,
            seed: 0,
            refresh_constraints: true,
            all_pairs: false,
            inner_iterations: INNER_ITERATIONS,
            init_sweeps: INIT_SWEEPS,
            warmup: Warmup::default(),
        }
    }
}

impl PlcConfig {
    pub fn validate(&self) -> Result<(), PlcError> {
        let bad = |msg: &str| Err(PlcError::Input(msg.into()));
        if self.k == 0 {
            return bad("k must be at least 1");
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.gamma >= 0.0) {
            return bad("alpha, beta and gamma must be nonnegative");
        }
        if !self.alpha.is_finite() || !self.beta.is_finite() || !self.gamma.is_finite() {
            return bad("alpha, beta and gamma must be finite");
        }
        if !(self.rel_tol > 0.0) {
            return bad("rel_tol must be positive");
        }
        if !(self.warmup.rel_tol >= 0.0) {
            return bad("warmup rel_tol must be nonnegative");
        }
        if self.clusters < 1 {
            return bad("need at least one cluster");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlcState {
    pub graph: WeightGraph,
    pub confidence: ConfidenceMatrix,
    /// Absent for the variants without propagation.
    pub constraints: Option<ConstraintState>,
    /// Joint objective after initialization and after every outer iteration.
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl PlcState {
    pub fn pseudo_labels(&self) -> Vec<usize> {
        pseudo_labels(self.confidence.matrix())
    }
}

pub fn run_plc(problem: &PartialLabelProblem, config: &PlcConfig) -> Result<PlcState, PlcError> {
    run_plc_observed(problem, config, |_| {})
}

/// [`run_plc`] calling `observer` after every outer iteration.
pub fn run_plc_observed(
    problem: &PartialLabelProblem,
    config: &PlcConfig,
    mut observer: impl FnMut(&PlcState),
) -> Result<PlcState, PlcError> {
    config.validate()?;
    let x = problem.dataset().features();
    let y = problem.candidates();
    let n = x.rows();
    if config.k >= n {
        return Err(PlcError::Input(format!("k = {} needs more than {n} rows", config.k)));
    }
    let scope = if config.all_pairs { None } else { Some(problem.train_mask()) };

    let neighbors = build_knn(x, config.k)?;
    let graph = init_weights(x, &neighbors)?;
    let mut confidence = init_confidence(y)?;
    if matches!(config.variant, Variant::Full | Variant::Ld) {
        confidence = solve_confidence(graph.weights(), y, confidence, config)?;
    }
    let constraints = match config.variant {
        Variant::Full | Variant::Sd => {
            let (m, c, p) = build_constraints(&pseudo_labels(confidence.matrix()), scope)?;
            let mut cs = ConstraintState::new(m, c, p, config.gamma)?;
            warm_up(&mut cs, graph.weights(), config.alpha, config.beta, config.warmup)?;
            Some(cs)
        }
        Variant::Cw | Variant::Ld => None,
    };
    let mut state = PlcState { graph, confidence, constraints, objective_trace: Vec::new(), iterations_run: 0, converged: false };
    let first = joint_objective(&state, problem, config);
    if !first.is_finite() {
        return Err(PlcError::NonFiniteObjective { iteration: 0 });
    }
    state.objective_trace.push(first);
    if config.variant == Variant::Cw {
        state.converged = true;
        return Ok(state);
    }

    for iteration in 1..=config.max_outer {
        let use_labels = config.variant != Variant::Sd;
        let f = use_labels.then(|| state.confidence.matrix());
        let sd = state.constraints.as_ref().map(|c| (&c.s, &c.d));
        state.graph = update_weights_with(x, f, sd, &neighbors, config.alpha, config.beta)?;

        if use_labels {
            state.confidence = update_confidence(state.graph.weights(), y, &state.confidence)?;
        }
        if let Some(cs) = state.constraints.as_mut() {
            if config.refresh_constraints && config.variant == Variant::Full {
                let (m, c, p) = build_constraints(&pseudo_labels(state.confidence.matrix()), scope)?;
                cs.set_constraints(m, c, p);
            }
            update_sd(cs, state.graph.weights(), config.alpha, config.beta, config.inner_iterations)?;
        }

        let value = joint_objective(&state, problem, config);
        if !value.is_finite() {
            return Err(PlcError::NonFiniteObjective { iteration });
        }
        let previous = *state.objective_trace.last().expect("trace starts non-empty");
        state.objective_trace.push(value);
        state.iterations_run = iteration;
        observer(&state);
        if (previous - value).abs() <= config.rel_tol * previous.abs().max(f64::MIN_POSITIVE) {
            state.converged = true;
            break;
        }
    }
    Ok(state)
}

/// Repeats confidence sweeps until the objective settles.
fn solve_confidence(
    w: &Matrix,
    y: &Matrix,
    mut confidence: ConfidenceMatrix,
    config: &PlcConfig,
) -> Result<ConfidenceMatrix, PlcError> {
    let mut previous = disambiguation_objective(w, confidence.matrix());
    for _ in 0..config.init_sweeps {
        confidence = update_confidence(w, y, &confidence)?;
        let value = disambiguation_objective(w, confidence.matrix());
        if previous - value <= config.rel_tol * previous.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        previous = value;
    }
    Ok(confidence)
}

/// Feature and label reconstruction errors, the two propagation traces (on
/// the symmetrized graph), the adversarial term and the γ penalties. Terms
/// of blocks a variant does not use are left out.
pub fn joint_objective(state: &PlcState, problem: &PartialLabelProblem, config: &PlcConfig) -> f64 {
    let w = state.graph.weights();
    let mut total = reconstruction_error(w, problem.dataset().features());
    if matches!(config.variant, Variant::Full | Variant::Ld | Variant::Sd) {
        total += reconstruction_error(w, state.confidence.matrix());
    }
    if let Some(cs) = &state.constraints {
        total += pcp_objective(cs, &symmetric_laplacian(w), config.alpha, config.beta);
    }
    total
}

/// Spectral clustering of `(W + Wᵀ)/2` into `config.clusters` groups.
pub fn finalize(state: &PlcState, config: &PlcConfig) -> Result<SpectralResult, PlcError> {
    spectral_cluster(&state.graph.symmetrized(), config.clusters, config.seed)
}

/// Symmetrized weights of a finished run.
pub fn final_affinity(state: &PlcState) -> Matrix {
    state.graph.symmetrized()
}
